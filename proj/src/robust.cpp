#include "hetnet/robust.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "json_detail.hpp"

namespace hetnet
{

using conic::ConeSolver;
using conic::ConeStatus;
using Expr = conic::Affine<double>;

void RobustInstance::validate() const
{
    base.validate();
    if (static_cast<int>(h_tilde.size()) != base.L)
        throw std::invalid_argument("robust instance: h_tilde must have L rows");
    for (int l = 0; l < base.L; ++l)
    {
        if (static_cast<int>(h_tilde[l].size()) != base.K)
            throw std::invalid_argument("robust instance: h_tilde must have K entries per BS");
        for (int k = 0; k < base.K; ++k)
            if (h_tilde[l][k].size() != base.N[l])
                throw std::invalid_argument("robust instance: h_tilde entry has wrong antenna count");
    }
    if (xi.size() != base.K)
        throw std::invalid_argument("robust instance: xi must have K entries");
    if (!(xi.array() >= 0).all() || !xi.allFinite())
        throw std::invalid_argument("robust instance: xi must be finite and nonnegative");
}

CVecXd RobustInstance::stacked_estimate(int k) const
{
    CVecXd out(base.total_antennas());
    for (int l = 0; l < base.L; ++l)
        out.segment(base.antenna_offset(l), base.N[l]) = h_tilde[l][k];
    return out;
}

NetworkInstance RobustInstance::nominal() const
{
    NetworkInstance inst = base;
    inst.h = h_tilde;
    return inst;
}

RobustInstance make_robust(const NetworkInstance& inst, double theta)
{
    if (!(theta >= 0))
        throw std::invalid_argument("make_robust: theta must be nonnegative");
    RobustInstance r;
    r.base = inst;
    r.h_tilde = inst.h;
    r.xi.resize(inst.K);
    for (int k = 0; k < inst.K; ++k)
        r.xi(k) = theta * inst.stacked_channel(k).norm();
    r.validate();
    return r;
}

// ---------------------------------------------------------------------------

std::string to_json(const RobustInstance& rinst)
{
    rinst.validate();
    auto j = nlohmann::json::parse(to_json(rinst.base));
    nlohmann::json ht = nlohmann::json::array();
    for (int l = 0; l < rinst.base.L; ++l)
        for (int k = 0; k < rinst.base.K; ++k)
        {
            nlohmann::json link = nlohmann::json::array();
            for (Eigen::Index n = 0; n < rinst.h_tilde[l][k].size(); ++n)
                link.push_back({rinst.h_tilde[l][k](n).real(), rinst.h_tilde[l][k](n).imag()});
            ht.push_back(link);
        }
    j["h_tilde"] = ht;
    j["xi"] = std::vector<double>(rinst.xi.data(), rinst.xi.data() + rinst.xi.size());
    return j.dump(1) + "\n";
}

RobustInstance robust_from_json(const std::string& text)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw std::invalid_argument(std::string("robust instance: ") + e.what());
    }
    RobustInstance r;
    r.base = detail::instance_from_object(j, {"h_tilde", "xi"});
    try
    {
        if (!j.contains("h_tilde") || !j.contains("xi"))
            throw std::invalid_argument("robust instance: missing h_tilde or xi");
        r.h_tilde = detail::channels_from_json(j.at("h_tilde"), r.base.L, r.base.K, r.base.N);
        const auto xi = j.at("xi").get<std::vector<double>>();
        r.xi = Eigen::Map<const VecXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw std::invalid_argument(std::string("robust instance: ") + e.what());
    }
    r.validate();
    return r;
}

void write_instance(const std::string& path, const RobustInstance& rinst)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << to_json(rinst);
}

RobustInstance read_robust_instance(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return robust_from_json(ss.str());
}

// ---------------------------------------------------------------------------

int HermitianBlock::re(int r, int c) const { return offset + conic::svec_index(order, r, c); }

int HermitianBlock::im(int r, int c) const
{
    return offset + order * (order + 1) / 2 + c * order - c * (c + 1) / 2 + (r - c - 1);
}

namespace
{

enum class Kind
{
    Subproblem,
    Probe,
    Weighted,
};

struct CExpr
{
    Expr re, im;

    // this += c * e
    void axpy(Complex c, const CExpr& e)
    {
        Expr t;
        t = e.re, t *= c.real(), re += t;
        t = e.im, t *= -c.imag(), re += t;
        t = e.im, t *= c.real(), im += t;
        t = e.re, t *= c.imag(), im += t;
    }
};

CExpr entry(const HermitianBlock& X, int r, int c)
{
    CExpr e;
    if (r == c)
        e.re.add(X.re(r, r), 1.0);
    else if (r > c)
    {
        e.re.add(X.re(r, c), 1.0);
        e.im.add(X.im(r, c), 1.0);
    }
    else
    {
        e.re.add(X.re(c, r), 1.0);
        e.im.add(X.im(c, r), -1.0);
    }
    return e;
}

// M >= 0 for Hermitian M of order m given by lower(i, j), i >= j
template <typename F>
void add_hermitian_psd(conic::ProgramBuilder<double>& b, int m, F lower)
{
    const int n = 2 * m;
    std::vector<Expr> cells(conic::svec_size(n));
    for (int j = 0; j < m; ++j)
        for (int i = j; i < m; ++i)
        {
            const CExpr e = lower(i, j);
            cells[conic::svec_index(n, i, j)] = e.re;
            cells[conic::svec_index(n, i + m, j + m)] = e.re;
            cells[conic::svec_index(n, i + m, j)] = e.im; // Im M(i, j)
            if (i != j)
            {
                Expr neg = e.im;
                neg *= -1.0;
                cells[conic::svec_index(n, j + m, i)] = neg; // Im M(j, i)
            }
        }
    b.add_psd(n, std::move(cells));
}

struct Built
{
    RobustProgram out;
    bool every_user_served = true;
};

Built build(const RobustInstance& rinst, const Activation* a, const VecXd* weights, Kind kind)
{
    rinst.validate();
    const auto& inst = rinst.base;
    if (a && (static_cast<int>(a->size()) != inst.L || !is_binary(*a)))
        throw std::invalid_argument("activation must be binary with one entry per BS");
    if (weights && (weights->size() != inst.L || !(weights->array() >= 0).all()))
        throw std::invalid_argument("weights must be nonnegative with one entry per BS");

    Built built;
    auto& lay = built.out.layout;
    lay.scale = power_scale(rinst.nominal());
    const double s = lay.scale;
    conic::ProgramBuilder<double> b;
    auto included = [&](int l) { return kind != Kind::Subproblem || (*a)[l]; };

    // antennas carrying any beamformer
    std::vector<int> space;
    std::vector<char> bs_used(inst.L, 0);
    for (int l = 0; l < inst.L; ++l)
        for (int k = 0; k < inst.K; ++k)
            if (included(l) && inst.serves(l, k))
                bs_used[l] = 1;
    for (int l = 0; l < inst.L; ++l)
        if (bs_used[l])
            for (int n = 0; n < inst.N[l]; ++n)
                space.push_back(inst.antenna_offset(l) + n);
    const int na = static_cast<int>(space.size());

    lay.X.resize(inst.K);
    std::vector<std::vector<int>> local(inst.K, std::vector<int>(inst.total_antennas(), -1));
    for (int k = 0; k < inst.K; ++k)
    {
        auto& X = lay.X[k];
        for (int l = 0; l < inst.L; ++l)
            if (included(l) && inst.serves(l, k))
                for (int n = 0; n < inst.N[l]; ++n)
                {
                    local[k][inst.antenna_offset(l) + n] = static_cast<int>(X.antennas.size());
                    X.antennas.push_back(inst.antenna_offset(l) + n);
                }
        X.order = static_cast<int>(X.antennas.size());
        if (X.order == 0)
            built.every_user_served = false;
        X.offset = b.add_variables(HermitianBlock::num_vars(X.order));
    }
    lay.tau_var.assign(inst.K, -1);
    for (int k = 0; k < inst.K; ++k)
        if (rinst.xi(k) > 0)
            lay.tau_var[k] = b.add_variables(1);
    if (kind == Kind::Probe)
    {
        lay.t_var = b.add_variables(1);
        b.set_objective(lay.t_var, 1.0);
    }

    // power of BS l: sum_k tr(B_l Xhat_k)
    std::vector<Expr> power(inst.L);
    for (int k = 0; k < inst.K; ++k)
    {
        const auto& X = lay.X[k];
        for (int r = 0; r < X.order; ++r)
        {
            int l = 0;
            while (l + 1 < inst.L && inst.antenna_offset(l + 1) <= X.antennas[r])
                ++l;
            power[l].add(X.re(r, r), 1.0);
            if (kind != Kind::Probe)
                b.set_objective(X.re(r, r), kind == Kind::Weighted ? (*weights)(l) : 1.0);
        }
    }

    for (int k = 0; k < inst.K; ++k)
        if (lay.X[k].order > 0)
            add_hermitian_psd(b, lay.X[k].order, [&](int i, int j) { return entry(lay.X[k], i, j); });

    if (na > 0)
        for (int k = 0; k < inst.K; ++k)
        {
            const double whiten = std::sqrt(s / inst.sigma2(k));
            const CVecXd hk = rinst.stacked_estimate(k);
            CVecXd g(na);
            for (int i = 0; i < na; ++i)
                g(i) = whiten * hk(space[i]);
            const double zeta = whiten * rinst.xi(k);

            // Yhat = Xhat_k / gamma_k - sum_{i != k} Xhat_i on the active antennas
            std::vector<CExpr> Y(static_cast<std::size_t>(na) * na);
            for (int c = 0; c < na; ++c)
                for (int r = 0; r < na; ++r)
                {
                    CExpr& y = Y[static_cast<std::size_t>(c) * na + r];
                    for (int u = 0; u < inst.K; ++u)
                    {
                        const int lr = local[u][space[r]], lc = local[u][space[c]];
                        if (lr < 0 || lc < 0)
                            continue;
                        y.axpy(u == k ? 1.0 / inst.gamma(k) : -1.0, entry(lay.X[u], lr, lc));
                    }
                }
            auto Yat = [&](int r, int c) -> const CExpr& { return Y[static_cast<std::size_t>(c) * na + r]; };

            std::vector<CExpr> gY(na); // (g^H Yhat)_j
            CExpr quad;                // g^H Yhat g
            for (int j = 0; j < na; ++j)
            {
                for (int i = 0; i < na; ++i)
                    gY[j].axpy(std::conj(g(i)), Yat(i, j));
                quad.axpy(g(j), gY[j]);
            }
            quad.re.constant -= 1.0;

            if (lay.tau_var[k] < 0)
            {
                b.add_nonneg(quad.re);
                continue;
            }
            const int tau = lay.tau_var[k];
            b.add_nonneg(Expr().add(tau, 1.0));
            add_hermitian_psd(b, na + 1, [&](int i, int j) {
                if (i < na)
                {
                    CExpr e = Yat(i, j);
                    if (i == j)
                        e.re.add(tau, 1.0);
                    return e;
                }
                if (j < na)
                    return gY[j];
                CExpr e = quad;
                e.re.add(tau, -zeta * zeta);
                return e;
            });
        }

    lay.cap_row.assign(inst.L, -1);
    if (kind != Kind::Weighted)
        for (int l = 0; l < inst.L; ++l)
        {
            if (power[l].terms.empty())
                continue;
            Expr cap((*a)[l] * inst.P(l) / s);
            Expr neg = power[l];
            neg *= -1.0;
            cap += neg;
            if (kind == Kind::Probe)
                cap.add(lay.t_var, 1.0);
            lay.cap_row[l] = b.add_nonneg(cap);
        }

    built.out.program = b.build();
    return built;
}

bool within_caps(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    for (int l = 0; l < inst.L; ++l)
        if (sol.tx_power(l) > sol.activation[l] * inst.P(l) * (1 + 1e-9))
            return false;
    return true;
}

CMatXd interference_form(const RobustInstance& rinst, const CMatXd& w, int k)
{
    CMatXd Q = w.col(k) * w.col(k).adjoint() / rinst.base.gamma(k);
    for (int i = 0; i < rinst.base.K; ++i)
        if (i != k)
            Q.noalias() -= w.col(i) * w.col(i).adjoint();
    return Q;
}

BeamformingSolution make_solution(const NetworkInstance& inst, const Activation& a, CMatXd w)
{
    BeamformingSolution sol;
    sol.w = std::move(w);
    sol.activation = a;
    finalize(inst, sol);
    return sol;
}

std::optional<BeamformingSolution> polish(const RobustInstance& rinst, const Activation& a, const CMatXd& w,
                                          bool check_caps)
{
    const auto c = robust_rescale(rinst, w);
    if (!c)
        return std::nullopt;
    auto sol = make_solution(rinst.base, a, *c * w);
    if (check_caps && !within_caps(rinst.base, sol))
        return std::nullopt;
    return sol;
}

std::optional<CMatXd> rank_one_all(const std::vector<CMatXd>& X, double tol_ratio)
{
    CMatXd w(X.front().rows(), static_cast<Eigen::Index>(X.size()));
    for (std::size_t k = 0; k < X.size(); ++k)
    {
        const auto v = extract_rank_one(X[k], tol_ratio);
        if (!v)
            return std::nullopt;
        w.col(static_cast<Eigen::Index>(k)) = *v;
    }
    return w;
}

std::optional<BeamformingSolution> rounding(const RobustInstance& rinst, const Activation& a,
                                            const std::vector<CMatXd>& X, int samples, std::uint64_t seed,
                                            bool check_caps)
{
    const auto& inst = rinst.base;
    if (samples <= 0)
        return std::nullopt;
    if (const auto w = rank_one_all(X, 1e-6))
        return polish(rinst, a, *w, check_caps);

    std::vector<CMatXd> factor(inst.K);
    for (int k = 0; k < inst.K; ++k)
    {
        Eigen::SelfAdjointEigenSolver<CMatXd> es(X[k]);
        factor[k] = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    Rng rng(seed);
    std::optional<BeamformingSolution> best;
    const int n = inst.total_antennas();
    for (int draw = 0; draw < samples; ++draw)
    {
        CMatXd w(n, inst.K);
        for (int k = 0; k < inst.K; ++k)
        {
            CVecXd z(n);
            for (int i = 0; i < n; ++i)
                z(i) = rng.cgaussian();
            w.col(k) = factor[k] * z;
        }
        auto sol = polish(rinst, a, w, check_caps);
        if (sol && (!best || sol->objective < best->objective))
            best = std::move(sol);
    }
    return best;
}

struct Recovered
{
    Recovery recovery = Recovery::Failed;
    BeamformingSolution solution;
};

Recovered recover(const RobustInstance& rinst, const Activation& a, const std::vector<CMatXd>& X,
                  const RobustOptions& options, bool check_caps)
{
    Recovered out;
    if (const auto w = rank_one_all(X, options.rank_tol))
        if (auto sol = polish(rinst, a, *w, check_caps))
        {
            out.recovery = Recovery::RankOne;
            out.solution = std::move(*sol);
            return out;
        }
    if (auto sol = rounding(rinst, a, X, options.rounding_samples, options.rounding_seed, check_caps))
    {
        out.recovery = Recovery::Rounded;
        out.solution = std::move(*sol);
        return out;
    }
    // principal eigenvectors, whatever they are worth
    CMatXd w(rinst.base.total_antennas(), rinst.base.K);
    for (int k = 0; k < rinst.base.K; ++k)
    {
        Eigen::SelfAdjointEigenSolver<CMatXd> es(X[k]);
        const Eigen::Index top = es.eigenvalues().size() - 1;
        w.col(k) = std::sqrt(std::max(0.0, es.eigenvalues()(top))) * es.eigenvectors().col(top);
    }
    out.solution = make_solution(rinst.base, a, w);
    return out;
}

VecXd rank_ratios(const std::vector<CMatXd>& X)
{
    VecXd out(static_cast<Eigen::Index>(X.size()));
    for (std::size_t k = 0; k < X.size(); ++k)
    {
        Eigen::SelfAdjointEigenSolver<CMatXd> es(X[k], Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        const Eigen::Index n = ev.size();
        out(static_cast<Eigen::Index>(k)) =
            n < 2 || ev(n - 1) <= 0 ? 0.0 : std::max(0.0, ev(n - 2)) / ev(n - 1);
    }
    return out;
}

} // namespace

RobustProgram build_robust_subproblem(const RobustInstance& rinst, const Activation& a)
{
    return build(rinst, &a, nullptr, Kind::Subproblem).out;
}

RobustProgram build_robust_probe(const RobustInstance& rinst, const Activation& a)
{
    return build(rinst, &a, nullptr, Kind::Probe).out;
}

RobustProgram build_robust_weighted(const RobustInstance& rinst, const VecXd& weights)
{
    return build(rinst, nullptr, &weights, Kind::Weighted).out;
}

std::vector<CMatXd> extract_covariances(const NetworkInstance& inst, const RobustLayout& layout, const VecXd& x)
{
    const int n = inst.total_antennas();
    std::vector<CMatXd> out(inst.K, CMatXd::Zero(n, n));
    for (int k = 0; k < inst.K; ++k)
    {
        const auto& X = layout.X[k];
        for (int c = 0; c < X.order; ++c)
            for (int r = c; r < X.order; ++r)
            {
                const Complex v = layout.scale * Complex(x(X.re(r, c)), r == c ? 0.0 : x(X.im(r, c)));
                out[k](X.antennas[r], X.antennas[c]) = v;
                out[k](X.antennas[c], X.antennas[r]) = std::conj(v);
            }
    }
    return out;
}

std::optional<CVecXd> extract_rank_one(const CMatXd& X, double tol_ratio)
{
    if (X.rows() != X.cols() || X.rows() == 0)
        throw std::invalid_argument("extract_rank_one: expected a nonempty square matrix");
    Eigen::SelfAdjointEigenSolver<CMatXd> es(X);
    const auto& ev = es.eigenvalues();
    const Eigen::Index top = ev.size() - 1;
    if (!(ev(top) > 0))
        return CVecXd::Zero(X.rows()).eval();
    if (top > 0 && std::max(0.0, ev(top - 1)) > tol_ratio * ev(top))
        return std::nullopt;
    return (std::sqrt(ev(top)) * es.eigenvectors().col(top)).eval();
}

double worst_case_quadratic(const CMatXd& Q, const CVecXd& h, double xi)
{
    if (xi < 0)
        throw std::invalid_argument("worst_case_quadratic: negative radius");
    const double nominal = std::real(h.dot(Q * h));
    if (xi == 0)
        return nominal;
    // (h + d)^H Q (h + d) is unchanged by h, d -> h / unit, d / unit and Q -> unit^2 Q
    const double unit = std::max(h.norm(), xi);
    Eigen::SelfAdjointEigenSolver<CMatXd> es(Q * (unit * unit));
    const double spread = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(spread > 0))
        return 0.0;
    const VecXd lam = es.eigenvalues() / spread;
    const CVecXd bvec = es.eigenvectors().adjoint() * (h / unit);
    const VecXd b2 = bvec.cwiseAbs2();
    const double r = xi / unit;
    const Eigen::Index n = lam.size();

    // v = b + y with ||y|| <= r minimising sum lam_i |v_i|^2; v_i = nu b_i / (lam_i + nu)
    auto step2 = [&](double nu) {
        double acc = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (lam(i) + nu > 0)
                acc += lam(i) * lam(i) * b2(i) / ((lam(i) + nu) * (lam(i) + nu));
        return acc;
    };
    auto value = [&](double nu) {
        double acc = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (lam(i) + nu > 0)
                acc += lam(i) * nu * nu * b2(i) / ((lam(i) + nu) * (lam(i) + nu));
        return acc;
    };

    const double lmin = lam(0);
    if (lmin >= 0 && b2.sum() <= r * r)
        return 0.0; // the ball reaches v = 0
    const double lo0 = std::max(0.0, -lmin);
    double lo = lo0, hi = lo0 + 1;
    // hard case: the boundary of the feasible multipliers already fits inside the ball
    if (lmin < 0)
    {
        double inner = 0;
        bool degenerate = true;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            if (lam(i) <= lmin + 1e-14 * std::abs(lmin))
            {
                degenerate = degenerate && b2(i) <= 1e-30;
                continue;
            }
            inner += lam(i) * lam(i) * b2(i) / ((lam(i) + lo0) * (lam(i) + lo0));
        }
        if (degenerate && inner <= r * r)
        {
            double v = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (lam(i) > lmin + 1e-14 * std::abs(lmin))
                    v += lam(i) * lo0 * lo0 * b2(i) / ((lam(i) + lo0) * (lam(i) + lo0));
            return spread * (v + lmin * (r * r - inner));
        }
    }
    while (step2(hi) > r * r)
        hi = lo0 + 2 * (hi - lo0);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (step2(mid) > r * r ? lo : hi) = mid;
    }
    return spread * value(hi);
}

double worst_case_margin(const RobustInstance& rinst, const CMatXd& w, int k)
{
    return worst_case_quadratic(interference_form(rinst, w, k), rinst.stacked_estimate(k), rinst.xi(k)) -
           rinst.base.sigma2(k);
}

std::optional<double> robust_rescale(const RobustInstance& rinst, const CMatXd& w)
{
    double c2 = 0;
    for (int k = 0; k < rinst.base.K; ++k)
    {
        const double m =
            worst_case_quadratic(interference_form(rinst, w, k), rinst.stacked_estimate(k), rinst.xi(k));
        if (!(m > 0))
            return std::nullopt;
        c2 = std::max(c2, rinst.base.sigma2(k) / m);
    }
    return std::sqrt(c2);
}

const char* to_string(Recovery recovery)
{
    switch (recovery)
    {
    case Recovery::RankOne: return "RankOne";
    case Recovery::Rounded: return "Rounded";
    case Recovery::Failed: return "Failed";
    }
    return "?";
}

std::optional<BeamformingSolution> randomized_rounding(const RobustInstance& rinst, const Activation& a,
                                                       const std::vector<CMatXd>& X, int samples,
                                                       std::uint64_t seed)
{
    return rounding(rinst, a, X, samples, seed, true);
}

namespace
{

void fill_probe(const RobustInstance& rinst, const Activation& a, const RobustOptions& options, RobustSolution& out)
{
    const auto& inst = rinst.base;
    const auto built = build(rinst, &a, nullptr, Kind::Probe).out;
    const auto sol = ConeSolver<double>(settings_for(options.tol)).solve(built.program);
    ++out.solves;
    if (sol.status == ConeStatus::PrimalInfeasible)
    {
        out.status = SubproblemStatus::SinrInfeasible;
        return;
    }
    out.status = SubproblemStatus::NumericalFailure;
    if (sol.status != ConeStatus::Optimal)
        return;
    const double s = built.layout.scale;
    VecXd raw = VecXd::Zero(inst.L);
    double capped = 0;
    for (int l = 0; l < inst.L; ++l)
        if (built.layout.cap_row[l] >= 0)
        {
            raw(l) = std::max(0.0, sol.z(built.layout.cap_row[l]));
            capped += raw(l) * a[l] * inst.P(l);
        }
    const double total = raw.sum();
    const double t_star = s * sol.primal_objective;
    if (!(total > 0) || !(t_star > 0))
        return;
    out.status = SubproblemStatus::Infeasible;
    out.lambda = raw / total;
    out.t_star = t_star;
    out.lambda_bound = (s * sol.dual_objective + capped) / total;
}

} // namespace

RobustSolution solve_robust_fixed(const RobustInstance& rinst, const Activation& a, const RobustOptions& options,
                                  bool certify)
{
    const auto& inst = rinst.base;
    RobustSolution out;
    const auto built = build(rinst, &a, nullptr, Kind::Subproblem);
    const auto& lay = built.out.layout;
    bool infeasible = !built.every_user_served;
    if (!infeasible)
    {
        const auto sol = ConeSolver<double>(settings_for(options.tol)).solve(built.out.program);
        out.solves = 1;
        if (sol.status == ConeStatus::Optimal)
        {
            out.status = SubproblemStatus::Optimal;
            out.objective = lay.scale * sol.primal_objective;
            out.X = extract_covariances(inst, lay, sol.x);
            out.tau = VecXd::Zero(inst.K);
            for (int k = 0; k < inst.K; ++k)
                if (lay.tau_var[k] >= 0)
                    out.tau(k) = sol.x(lay.tau_var[k]);
            out.mu = VecXd::Zero(inst.L);
            for (int l = 0; l < inst.L; ++l)
                if (lay.cap_row[l] >= 0)
                    out.mu(l) = std::max(0.0, sol.z(lay.cap_row[l]));
            out.rank_ratio = rank_ratios(out.X);
            auto rec = recover(rinst, a, out.X, options, true);
            out.recovery = rec.recovery;
            out.beamformers = std::move(rec.solution);
            return out;
        }
        if (sol.status != ConeStatus::PrimalInfeasible)
            return out;
        infeasible = true;
    }
    out.status = SubproblemStatus::Infeasible;
    if (certify)
        fill_probe(rinst, a, options, out);
    return out;
}

ConicOutcome RobustOracle::solve(const Activation& a, bool certify)
{
    last_ = solve_robust_fixed(rinst_, a, options_, certify);
    solves_ += last_.solves;
    ConicOutcome out;
    out.status = last_.status;
    out.solves = last_.solves;
    if (last_.status == SubproblemStatus::Optimal)
    {
        out.value = last_.objective;
        out.mu = last_.mu;
        if (last_.beamformers)
            out.solution = *last_.beamformers;
    }
    else if (last_.status == SubproblemStatus::Infeasible && certify)
    {
        out.lambda = last_.lambda;
        out.t_star = last_.t_star;
        out.lambda_bound = last_.lambda_bound;
    }
    return out;
}

WeightedOutcome RobustOracle::weighted_min(const VecXd& weights)
{
    const auto& inst = rinst_.base;
    WeightedOutcome out;
    const auto built = build(rinst_, nullptr, &weights, Kind::Weighted).out;
    const auto sol = ConeSolver<double>(settings_for(options_.tol)).solve(built.program);
    out.solves = 1;
    ++solves_;
    if (sol.status == ConeStatus::PrimalInfeasible)
    {
        out.status = SubproblemStatus::SinrInfeasible;
        return out;
    }
    if (sol.status != ConeStatus::Optimal)
        return out;
    out.status = SubproblemStatus::Optimal;
    out.value = built.layout.scale * sol.primal_objective;
    out.lower_bound = built.layout.scale * sol.dual_objective;
    const auto X = extract_covariances(inst, built.layout, sol.x);
    // per-BS power of the relaxation drives the subgradient, not the recovered beamformers
    auto rec = recover(rinst_, all_ones(inst.L), X, options_, false);
    out.solution = std::move(rec.solution);
    for (int l = 0; l < inst.L; ++l)
    {
        double p = 0;
        for (int k = 0; k < inst.K; ++k)
            p += X[k].diagonal().segment(inst.antenna_offset(l), inst.N[l]).real().sum();
        out.solution.tx_power(l) = p;
    }
    return out;
}

MonteCarloReport monte_carlo_check(const RobustInstance& rinst, const BeamformingSolution& sol, int samples_per_user,
                                   std::uint64_t seed, double slack)
{
    const auto& inst = rinst.base;
    MonteCarloReport rep;
    rep.worst_ratio = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    const int n = inst.total_antennas();
    for (int k = 0; k < inst.K; ++k)
    {
        const CVecXd hk = rinst.stacked_estimate(k);
        for (int t = 0; t < samples_per_user; ++t)
        {
            CVecXd d(n);
            for (int i = 0; i < n; ++i)
                d(i) = rng.cgaussian();
            const double radius = rinst.xi(k) * std::pow(rng.uniform(), 1.0 / (2 * n));
            const double dn = d.norm();
            const CVecXd h = dn > 0 ? CVecXd(hk + (radius / dn) * d) : hk;
            double interference = inst.sigma2(k);
            for (int i = 0; i < inst.K; ++i)
                if (i != k)
                    interference += std::norm(h.dot(sol.w.col(i)));
            const double ratio = std::norm(h.dot(sol.w.col(k))) / interference / inst.gamma(k);
            rep.worst_ratio = std::min(rep.worst_ratio, ratio);
            ++rep.samples;
            if (ratio < 1 - slack)
                ++rep.violations;
        }
    }
    return rep;
}

} // namespace hetnet
