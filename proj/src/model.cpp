#include "hetnet/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json_detail.hpp"

namespace hetnet
{

Activation all_ones(int L) { return Activation(L, 1); }

Activation all_zeros(int L) { return Activation(L, 0); }

Activation activation_from_mask(std::uint64_t mask, int L)
{
    Activation a(L);
    for (int l = 0; l < L; ++l)
        a[l] = static_cast<int>((mask >> l) & 1u);
    return a;
}

std::uint64_t activation_mask(const Activation& a)
{
    std::uint64_t mask = 0;
    for (std::size_t l = 0; l < a.size(); ++l)
        if (a[l])
            mask |= std::uint64_t{1} << l;
    return mask;
}

std::string bitstring(const Activation& a)
{
    std::string s;
    for (int v : a)
        s.push_back(v ? '1' : '0');
    return s;
}

bool is_binary(const Activation& a)
{
    for (int v : a)
        if (v != 0 && v != 1)
            return false;
    return true;
}

// ---------------------------------------------------------------------------

void NetworkInstance::validate() const
{
    auto fail = [](const std::string& msg) { throw std::invalid_argument("instance: " + msg); };
    if (L < 1 || K < 1)
        fail("L and K must be positive");
    if (static_cast<int>(N.size()) != L)
        fail("N must have L entries");
    for (int n : N)
        if (n < 1)
            fail("every BS needs at least one antenna");
    if (static_cast<int>(h.size()) != L)
        fail("h must have L rows");
    for (int l = 0; l < L; ++l)
    {
        if (static_cast<int>(h[l].size()) != K)
            fail("h[l] must have K entries");
        for (int k = 0; k < K; ++k)
            if (h[l][k].size() != N[l])
                fail("h[l][k] must have N[l] entries");
    }
    if (gamma.size() != K || sigma2.size() != K)
        fail("gamma and sigma2 must have K entries");
    if (P.size() != L || pi.size() != L)
        fail("P and pi must have L entries");
    if (!(gamma.array() > 0).all() || !gamma.allFinite())
        fail("gamma must be positive");
    if (!(sigma2.array() > 0).all() || !sigma2.allFinite())
        fail("sigma2 must be positive");
    if (!(P.array() > 0).all() || !P.allFinite())
        fail("P must be positive");
    if (!(pi.array() >= 0).all() || !pi.allFinite())
        fail("pi must be nonnegative");
    if (static_cast<int>(cell_of_bs.size()) != L || static_cast<int>(cell_of_user.size()) != K)
        fail("cell maps have wrong length");
    for (int c : cell_of_bs)
        if (c < 0)
            fail("negative cell index");
    for (int c : cell_of_user)
        if (c < 0)
            fail("negative cell index");
}

int NetworkInstance::total_antennas() const
{
    int total = 0;
    for (int n : N)
        total += n;
    return total;
}

int NetworkInstance::antenna_offset(int l) const
{
    int off = 0;
    for (int j = 0; j < l; ++j)
        off += N[j];
    return off;
}

CVecXd NetworkInstance::stacked_channel(int k) const
{
    CVecXd out(total_antennas());
    for (int l = 0, off = 0; l < L; off += N[l], ++l)
        out.segment(off, N[l]) = h[l][k];
    return out;
}

int NetworkInstance::num_cells() const
{
    std::set<int> cells(cell_of_bs.begin(), cell_of_bs.end());
    cells.insert(cell_of_user.begin(), cell_of_user.end());
    return static_cast<int>(cells.size());
}

// ---------------------------------------------------------------------------

static void check_dims(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    if (sol.w.rows() != inst.total_antennas() || sol.w.cols() != inst.K)
        throw std::invalid_argument("beamformer dimensions do not match the instance");
    if (static_cast<int>(sol.activation.size()) != inst.L)
        throw std::invalid_argument("activation length does not match the instance");
}

void finalize(const NetworkInstance& inst, BeamformingSolution& sol)
{
    check_dims(inst, sol);
    sol.tx_power = VecXd::Zero(inst.L);
    for (int l = 0; l < inst.L; ++l)
        sol.tx_power(l) = sol.w.middleRows(inst.antenna_offset(l), inst.N[l]).squaredNorm();
    sol.objective = total_power(inst, sol);
}

double eval_sinr(const NetworkInstance& inst, const BeamformingSolution& sol, int k)
{
    check_dims(inst, sol);
    if (k < 0 || k >= inst.K)
        throw std::out_of_range("eval_sinr: user index");
    const CVecXd hk = inst.stacked_channel(k);
    double interference = 0;
    for (int i = 0; i < inst.K; ++i)
        if (i != k)
            interference += std::norm(hk.dot(sol.w.col(i)));
    return std::norm(hk.dot(sol.w.col(k))) / (interference + inst.sigma2(k));
}

double total_power(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    check_dims(inst, sol);
    double total = sol.w.squaredNorm();
    for (int l = 0; l < inst.L; ++l)
        if (sol.activation[l])
            total += inst.pi(l);
    return total;
}

double min_sinr_slack(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    double slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < inst.K; ++k)
        slack = std::min(slack, eval_sinr(inst, sol, k) / inst.gamma(k) - 1.0);
    return slack;
}

double max_cap_violation(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    double worst = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < inst.L; ++l)
    {
        const double used = sol.w.middleRows(inst.antenna_offset(l), inst.N[l]).squaredNorm();
        worst = std::max(worst, (used - sol.activation[l] * inst.P(l)) / inst.P(l));
    }
    return worst;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void PowerModel::validate() const
{
    if (!(P_slp >= 0) || !(P_act >= P_slp))
        throw std::invalid_argument("power model: need P_act >= P_slp >= 0");
    if (!(eta > 0 && eta <= 1))
        throw std::invalid_argument("power model: eta must lie in (0, 1]");
    if (!std::isfinite(P_max_dBm))
        throw std::invalid_argument("power model: P_max_dBm must be finite");
}

void HexnetParams::validate() const
{
    if (num_bs < 1 || num_bs > 7)
        throw std::invalid_argument("hexnet: num_bs must be in 1..7");
    if (antennas < 1)
        throw std::invalid_argument("hexnet: antennas must be positive");
    if (cells < 1 || cells > num_bs)
        throw std::invalid_argument("hexnet: cells must be in 1..num_bs");
    if (!(cell_radius_km > 0) || !(min_distance_km > 0))
        throw std::invalid_argument("hexnet: radius and minimum distance must be positive");
    if (!(shadow_std_db >= 0))
        throw std::invalid_argument("hexnet: shadowing std must be nonnegative");
    if (!std::isfinite(noise_dbm) || !std::isfinite(sinr_db) || !std::isfinite(pathloss_db_at_1km) ||
        !std::isfinite(pathloss_slope_db) || !std::isfinite(antenna_gain_dbi))
        throw std::invalid_argument("hexnet: non-finite parameter");
    power.validate();
}

double pathloss_db(const HexnetParams& params, double d_km)
{
    const double d = std::max(d_km, params.min_distance_km);
    return params.pathloss_db_at_1km + params.pathloss_slope_db * std::log10(d);
}

std::vector<std::pair<double, double>> hex_sites(double radius_km)
{
    // flat-topped hexagons; neighbours sit sqrt(3) R away at 30 + 60 i degrees
    std::vector<std::pair<double, double>> sites{{0.0, 0.0}};
    const double isd = std::sqrt(3.0) * radius_km;
    for (int i = 0; i < 6; ++i)
    {
        const double angle = std::numbers::pi / 6.0 + i * std::numbers::pi / 3.0;
        sites.emplace_back(isd * std::cos(angle), isd * std::sin(angle));
    }
    return sites;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::gaussian()
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phase);
    has_spare_ = true;
    return r * std::cos(phase);
}

Complex Rng::cgaussian()
{
    const double re = gaussian();
    const double im = gaussian();
    return Complex(re, im) / std::sqrt(2.0);
}

NetworkInstance generate_hexnet(std::uint64_t seed, int K, const HexnetParams& params)
{
    if (K < 1)
        throw std::invalid_argument("generate_hexnet: K must be positive");
    params.validate();
    Rng rng(seed);
    const int L = params.num_bs;
    const double R = params.cell_radius_km;
    const auto sites = hex_sites(R);

    NetworkInstance inst;
    inst.L = L;
    inst.K = K;
    inst.N.assign(L, params.antennas);
    inst.gamma = VecXd::Constant(K, db_to_linear(params.sinr_db));
    inst.sigma2 = VecXd::Constant(K, dbm_to_watts(params.noise_dbm));
    inst.P = VecXd::Constant(L, dbm_to_watts(params.power.P_max_dBm));
    inst.pi = VecXd::Constant(L, params.power.pi());
    inst.cell_of_bs.resize(L);
    for (int l = 0; l < L; ++l)
        inst.cell_of_bs[l] = l * params.cells / L;

    std::vector<std::pair<double, double>> users(K);
    for (auto& pos : users)
    {
        const int cell = std::min(L - 1, static_cast<int>(rng.uniform() * L));
        double x = 0, y = 0;
        const double half = std::sqrt(3.0) / 2.0 * R;
        do
        {
            x = (2.0 * rng.uniform() - 1.0) * R;
            y = (2.0 * rng.uniform() - 1.0) * half;
        } while (std::sqrt(3.0) * std::abs(x) + std::abs(y) > std::sqrt(3.0) * R);
        pos = {sites[cell].first + x, sites[cell].second + y};
    }

    auto distance = [&](int l, int k) {
        return std::hypot(users[k].first - sites[l].first, users[k].second - sites[l].second);
    };
    inst.cell_of_user.resize(K);
    for (int k = 0; k < K; ++k)
    {
        int nearest = 0;
        for (int l = 1; l < L; ++l)
            if (distance(l, k) < distance(nearest, k))
                nearest = l;
        inst.cell_of_user[k] = inst.cell_of_bs[nearest];
    }

    inst.h.assign(L, std::vector<CVecXd>(K));
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k)
        {
            const double shadow = params.shadow_std_db * rng.gaussian();
            const double gain_db = -pathloss_db(params, distance(l, k)) + params.antenna_gain_dbi + shadow;
            const double amplitude = std::pow(10.0, gain_db / 20.0);
            CVecXd hlk(params.antennas);
            for (int n = 0; n < params.antennas; ++n)
                hlk(n) = amplitude * rng.cgaussian();
            inst.h[l][k] = hlk;
        }
    inst.validate();
    return inst;
}

// ---------------------------------------------------------------------------

using nlohmann::json;

static json vec_json(const VecXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

static VecXd json_vec(const json& j)
{
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const VecXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string to_json(const NetworkInstance& inst)
{
    inst.validate();
    json j;
    j["L"] = inst.L;
    j["K"] = inst.K;
    j["N"] = inst.N;
    j["gamma"] = vec_json(inst.gamma);
    j["sigma2"] = vec_json(inst.sigma2);
    j["P"] = vec_json(inst.P);
    j["pi"] = vec_json(inst.pi);
    j["cell_of_bs"] = inst.cell_of_bs;
    j["cell_of_user"] = inst.cell_of_user;
    json h = json::array();
    for (int l = 0; l < inst.L; ++l)
        for (int k = 0; k < inst.K; ++k)
        {
            json link = json::array();
            for (Eigen::Index n = 0; n < inst.h[l][k].size(); ++n)
                link.push_back({inst.h[l][k](n).real(), inst.h[l][k](n).imag()});
            h.push_back(link);
        }
    j["h"] = h;
    return j.dump(1) + "\n";
}

namespace detail
{

using nlohmann::json;

std::vector<std::vector<CVecXd>> channels_from_json(const json& h, int L, int K, const std::vector<int>& N)
{
    if (!h.is_array() || static_cast<int>(h.size()) != L * K)
        throw std::invalid_argument("instance: h must have L*K entries");
    std::vector<std::vector<CVecXd>> out(L, std::vector<CVecXd>(K));
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k)
        {
            const json& link = h.at(l * K + k);
            if (!link.is_array() || static_cast<int>(link.size()) != N.at(l))
                throw std::invalid_argument("instance: h entry has wrong antenna count");
            CVecXd v(N[l]);
            for (int n = 0; n < N[l]; ++n)
            {
                const json& c = link.at(n);
                if (!c.is_array() || c.size() != 2)
                    throw std::invalid_argument("instance: complex values are [re, im] pairs");
                v(n) = Complex(c.at(0).get<double>(), c.at(1).get<double>());
            }
            out[l][k] = v;
        }
    return out;
}

NetworkInstance instance_from_object(const json& j, const std::set<std::string>& extra_keys)
{
    static const std::set<std::string> known{"L",  "K",      "N",          "gamma",        "sigma2",
                                             "P",  "pi",     "cell_of_bs", "cell_of_user", "h"};
    if (!j.is_object())
        throw std::invalid_argument("instance: expected a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key) && !extra_keys.count(key))
            throw std::invalid_argument("instance: unknown field '" + key + "'");
    for (const auto& key : known)
        if (!j.contains(key))
            throw std::invalid_argument("instance: missing field '" + key + "'");
    NetworkInstance inst;
    try
    {
        inst.L = j.at("L").get<int>();
        inst.K = j.at("K").get<int>();
        inst.N = j.at("N").get<std::vector<int>>();
        inst.gamma = json_vec(j.at("gamma"));
        inst.sigma2 = json_vec(j.at("sigma2"));
        inst.P = json_vec(j.at("P"));
        inst.pi = json_vec(j.at("pi"));
        inst.cell_of_bs = j.at("cell_of_bs").get<std::vector<int>>();
        inst.cell_of_user = j.at("cell_of_user").get<std::vector<int>>();
        if (static_cast<int>(inst.N.size()) != inst.L)
            throw std::invalid_argument("instance: N must have L entries");
        inst.h = channels_from_json(j.at("h"), inst.L, inst.K, inst.N);
    }
    catch (const json::exception& e)
    {
        throw std::invalid_argument(std::string("instance: ") + e.what());
    }
    inst.validate();
    return inst;
}

} // namespace detail

NetworkInstance instance_from_json(const std::string& text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw std::invalid_argument(std::string("instance: ") + e.what());
    }
    return detail::instance_from_object(j, {});
}

void write_instance(const std::string& path, const NetworkInstance& inst)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << to_json(inst);
}

NetworkInstance read_instance(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return instance_from_json(ss.str());
}

} // namespace hetnet
