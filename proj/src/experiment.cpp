#include "hetnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "hetnet/benders.hpp"
#include "hetnet/multicell.hpp"
#include "hetnet/oracle.hpp"
#include "hetnet/robust.hpp"
#include "hetnet/subgrad.hpp"

namespace hetnet
{

using nlohmann::json;

void ExperimentConfig::validate() const
{
    scenario.validate();
    if (users < 1)
        throw std::invalid_argument("config: users must be positive");
    if (sinr_db.empty())
        throw std::invalid_argument("config: sinr_db must list at least one target");
    for (double t : sinr_db)
        if (!std::isfinite(t))
            throw std::invalid_argument("config: sinr_db targets must be finite");
    if (algorithms.empty())
        throw std::invalid_argument("config: algorithms must not be empty");
    for (const auto& a : algorithms)
        if (std::find(known_algorithms().begin(), known_algorithms().end(), a) == known_algorithms().end())
            throw std::invalid_argument("config: unknown algorithm '" + a + "'");
    if (!(epsilon >= 0))
        throw std::invalid_argument("config: epsilon must be nonnegative");
    if (max_iters && *max_iters < 1)
        throw std::invalid_argument("config: max_iters must be positive");
    if (!(robust_theta >= 0))
        throw std::invalid_argument("config: robust_theta must be nonnegative");
    if (drops < 1)
        throw std::invalid_argument("config: drops must be at least 1");
    if (threads < 0)
        throw std::invalid_argument("config: threads must be nonnegative");
}

namespace
{

template <typename T>
void read_field(const json& j, const std::string& path, const char* key, T& out)
{
    if (!j.contains(key))
        return;
    try
    {
        out = j.at(key).get<T>();
    }
    catch (const json::exception& e)
    {
        throw std::invalid_argument("config: field '" + path + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!j.is_object())
        throw std::invalid_argument("config: '" + (path.empty() ? std::string("<root>") : path) +
                                    "' must be an object");
    for (const auto& [key, value] : j.items())
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
            throw std::invalid_argument("config: unknown field '" + path + key + "'");
}

} // namespace

ExperimentConfig config_from_json(const std::string& text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    reject_unknown(j, "", {"seed", "users", "scenario", "sinr_db", "algorithms", "epsilon", "max_iters",
                           "solve_budget", "robust_theta", "drops", "threads", "out"});
    ExperimentConfig c;
    read_field(j, "", "seed", c.seed);
    read_field(j, "", "users", c.users);
    read_field(j, "", "sinr_db", c.sinr_db);
    read_field(j, "", "algorithms", c.algorithms);
    read_field(j, "", "epsilon", c.epsilon);
    if (j.contains("max_iters") && !j.at("max_iters").is_null())
    {
        int m = 0;
        read_field(j, "", "max_iters", m);
        c.max_iters = m;
    }
    read_field(j, "", "solve_budget", c.solve_budget);
    read_field(j, "", "robust_theta", c.robust_theta);
    read_field(j, "", "drops", c.drops);
    read_field(j, "", "threads", c.threads);
    read_field(j, "", "out", c.out);
    if (j.contains("scenario"))
    {
        const json& s = j.at("scenario");
        reject_unknown(s, "scenario.",
                       {"num_bs", "antennas", "cells", "cell_radius_km", "pathloss_db_at_1km", "pathloss_slope_db",
                        "antenna_gain_dbi", "shadow_std_db", "min_distance_km", "noise_dbm", "power"});
        auto& p = c.scenario;
        read_field(s, "scenario.", "num_bs", p.num_bs);
        read_field(s, "scenario.", "antennas", p.antennas);
        read_field(s, "scenario.", "cells", p.cells);
        read_field(s, "scenario.", "cell_radius_km", p.cell_radius_km);
        read_field(s, "scenario.", "pathloss_db_at_1km", p.pathloss_db_at_1km);
        read_field(s, "scenario.", "pathloss_slope_db", p.pathloss_slope_db);
        read_field(s, "scenario.", "antenna_gain_dbi", p.antenna_gain_dbi);
        read_field(s, "scenario.", "shadow_std_db", p.shadow_std_db);
        read_field(s, "scenario.", "min_distance_km", p.min_distance_km);
        read_field(s, "scenario.", "noise_dbm", p.noise_dbm);
        if (s.contains("power"))
        {
            const json& pw = s.at("power");
            reject_unknown(pw, "scenario.power.", {"P_act", "P_slp", "eta", "P_max_dBm"});
            read_field(pw, "scenario.power.", "P_act", p.power.P_act);
            read_field(pw, "scenario.power.", "P_slp", p.power.P_slp);
            read_field(pw, "scenario.power.", "eta", p.power.eta);
            read_field(pw, "scenario.power.", "P_max_dBm", p.power.P_max_dBm);
        }
    }
    c.validate();
    return c;
}

std::string to_json(const ExperimentConfig& c)
{
    const auto& p = c.scenario;
    json j;
    j["seed"] = c.seed;
    j["users"] = c.users;
    j["scenario"] = {{"num_bs", p.num_bs},
                     {"antennas", p.antennas},
                     {"cells", p.cells},
                     {"cell_radius_km", p.cell_radius_km},
                     {"pathloss_db_at_1km", p.pathloss_db_at_1km},
                     {"pathloss_slope_db", p.pathloss_slope_db},
                     {"antenna_gain_dbi", p.antenna_gain_dbi},
                     {"shadow_std_db", p.shadow_std_db},
                     {"min_distance_km", p.min_distance_km},
                     {"noise_dbm", p.noise_dbm},
                     {"power",
                      {{"P_act", p.power.P_act},
                       {"P_slp", p.power.P_slp},
                       {"eta", p.power.eta},
                       {"P_max_dBm", p.power.P_max_dBm}}}};
    j["sinr_db"] = c.sinr_db;
    j["algorithms"] = c.algorithms;
    j["epsilon"] = c.epsilon;
    j["max_iters"] = c.max_iters ? json(*c.max_iters) : json(nullptr);
    j["solve_budget"] = c.solve_budget;
    j["robust_theta"] = c.robust_theta;
    j["drops"] = c.drops;
    j["threads"] = c.threads;
    j["out"] = c.out;
    return j.dump(1) + "\n";
}

NetworkInstance generate_instance(const ExperimentConfig& config, std::uint64_t seed)
{
    HexnetParams p = config.scenario;
    p.sinr_db = config.sinr_db.front();
    return generate_hexnet(seed, config.users, p);
}

std::string format_db(double db)
{
    std::ostringstream os;
    os << std::setprecision(6) << db;
    return os.str();
}

namespace
{

bool nominal_feasible(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    return min_sinr_slack(inst, sol) >= -1e-6 && max_cap_violation(inst, sol) <= 1e-9 &&
           masked_block_norm(inst, sol) == 0;
}

bool robust_feasible(const RobustInstance& rinst, const BeamformingSolution& sol)
{
    for (int k = 0; k < rinst.base.K; ++k)
        if (worst_case_margin(rinst, sol.w, k) < -1e-6 * rinst.base.sigma2(k))
            return false;
    return max_cap_violation(rinst.base, sol) <= 1e-9 && masked_block_norm(rinst.base, sol) == 0;
}

void with_file(const std::string* dir, const std::string& name, const auto& write)
{
    if (!dir)
        return;
    std::ofstream out(std::filesystem::path(*dir) / name, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + (std::filesystem::path(*dir) / name).string());
    write(out);
}

} // namespace

std::vector<RunRow> run_algorithms(const ExperimentConfig& config, const NetworkInstance& base,
                                   const std::string* trace_dir)
{
    config.validate();
    validate_topology(base);
    std::vector<RunRow> rows;
    for (double db : config.sinr_db)
    {
        NetworkInstance inst = base;
        inst.gamma = VecXd::Constant(inst.K, db_to_linear(db));
        const std::string tag = format_db(db) + "dB";
        for (const auto& algo : config.algorithms)
        {
            RunRow row;
            row.algorithm = algo;
            row.sinr_db = db;
            row.objective = std::numeric_limits<double>::quiet_NaN();
            const auto start = std::chrono::steady_clock::now();
            std::optional<BeamformingSolution> sol;
            bool feasible = false;

            if (algo == "benders" || algo == "robust-benders")
            {
                BendersOptions opt;
                opt.epsilon = config.epsilon;
                if (config.max_iters)
                    opt.max_iters = *config.max_iters;
                opt.solve_budget = config.solve_budget;
                BendersResult res;
                if (algo == "benders")
                {
                    NominalOracle oracle(inst);
                    res = run_benders(oracle, opt);
                    if (res.incumbent)
                        feasible = nominal_feasible(inst, *res.incumbent);
                }
                else
                {
                    const RobustInstance rinst = make_robust(inst, config.robust_theta);
                    RobustOracle oracle(rinst);
                    res = run_benders(oracle, opt);
                    if (res.incumbent)
                        feasible = robust_feasible(rinst, *res.incumbent);
                }
                sol = res.incumbent;
                row.status = to_string(res.status);
                row.iterations = res.iterations;
                row.solves = res.solves;
                with_file(trace_dir, algo + "_" + tag + ".csv",
                          [&](std::ostream& os) { write_trace_csv(os, res.trace); });
            }
            else if (algo == "subgrad")
            {
                SubgradOptions opt;
                if (config.max_iters)
                    opt.max_iters = *config.max_iters;
                opt.solve_budget = config.solve_budget;
                NominalOracle oracle(inst);
                const auto res = run_subgradient(oracle, opt);
                sol = res.solution;
                row.status = to_string(res.status);
                row.iterations = res.iterations;
                row.solves = res.solves;
                if (sol)
                    feasible = nominal_feasible(inst, *sol);
                with_file(trace_dir, algo + "_" + tag + ".csv",
                          [&](std::ostream& os) { write_trace_csv(os, res.trace); });
            }
            else if (algo == "oracle")
            {
                NominalOracle oracle(inst);
                const auto rep = enumerate_optimal(oracle);
                row.status = rep.feasible ? "Optimal" : (rep.failures ? "NumericalFailure" : "Infeasible");
                row.iterations = static_cast<int>(rep.entries.size());
                row.solves = rep.solves;
                if (rep.feasible)
                {
                    const auto out = oracle.solve(rep.argmin, false);
                    row.solves += out.solves;
                    if (out.status == SubproblemStatus::Optimal)
                    {
                        sol = out.solution;
                        feasible = nominal_feasible(inst, *sol);
                    }
                }
                with_file(trace_dir, algo + "_" + tag + ".csv",
                          [&](std::ostream& os) { write_report_csv(os, rep); });
            }
            else if (algo == "rba")
            {
                NominalOracle oracle(inst);
                const auto res = rba_baseline(oracle, config.seed);
                row.status = res.feasible ? (res.fallback ? "FeasibleFallback" : "Feasible") : "Infeasible";
                row.iterations = res.draws;
                row.solves = res.solves;
                if (res.feasible)
                {
                    sol = res.solution;
                    feasible = nominal_feasible(inst, *sol);
                }
            }

            if (sol)
            {
                row.objective = sol->objective;
                row.activation = bitstring(sol->activation);
            }
            row.feasible = feasible;
            row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            rows.push_back(row);
        }
    }
    return rows;
}

void write_results_csv(std::ostream& os, const std::vector<RunRow>& rows)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "algorithm,sinr_db,status,feasible,objective,activation,iterations,solves,millis\n";
    for (const auto& r : rows)
        os << r.algorithm << ',' << format_db(r.sinr_db) << ',' << r.status << ',' << (r.feasible ? 1 : 0) << ','
           << std::setprecision(17) << r.objective << ',' << r.activation << ',' << r.iterations << ',' << r.solves
           << ',' << std::setprecision(6) << r.millis << '\n';
    os.flags(flags);
    os.precision(prec);
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& config)
{
    config.validate();
    const int R = config.drops;
    std::vector<std::vector<RunRow>> per_drop(R);
    std::vector<std::string> errors(R);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < R; r = next++)
        {
            try
            {
                ExperimentConfig c = config;
                c.seed = config.seed + static_cast<std::uint64_t>(r);
                per_drop[r] = run_algorithms(c, generate_instance(c, c.seed));
            }
            catch (const std::exception& e)
            {
                errors[r] = e.what();
            }
        }
    };
    int workers = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, R);
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (int r = 0; r < R; ++r)
        if (!errors[r].empty())
            throw std::runtime_error("drop " + std::to_string(r) + ": " + errors[r]);

    std::vector<SweepCell> cells;
    for (std::size_t t = 0; t < config.sinr_db.size(); ++t)
        for (std::size_t a = 0; a < config.algorithms.size(); ++a)
        {
            SweepCell cell;
            cell.sinr_db = config.sinr_db[t];
            cell.algorithm = config.algorithms[a];
            cell.drops = R;
            double sum = 0, sum2 = 0, solves = 0;
            for (int r = 0; r < R; ++r)
            {
                const auto& row = per_drop[r][t * config.algorithms.size() + a];
                solves += static_cast<double>(row.solves);
                if (!row.feasible)
                    continue;
                ++cell.feasible;
                sum += row.objective;
                sum2 += row.objective * row.objective;
            }
            cell.mean_solves = solves / R;
            if (cell.feasible == 0)
            {
                cell.mean_power = cell.std_power = std::numeric_limits<double>::quiet_NaN();
            }
            else
            {
                cell.mean_power = sum / cell.feasible;
                cell.std_power = std::sqrt(std::max(0.0, sum2 / cell.feasible - cell.mean_power * cell.mean_power));
            }
            cells.push_back(cell);
        }
    return cells;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "sinr_db,algorithm,mean_power,std_power,feasible_drops,drops,mean_solves\n" << std::setprecision(17);
    for (const auto& c : cells)
        os << format_db(c.sinr_db) << ',' << c.algorithm << ',' << c.mean_power << ',' << c.std_power << ','
           << c.feasible << ',' << c.drops << ',' << c.mean_solves << '\n';
    os.flags(flags);
    os.precision(prec);
}

void print_summary(std::ostream& os, const NetworkInstance& inst)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "L=" << inst.L << " BSs, K=" << inst.K << " users, " << inst.total_antennas() << " antennas, "
       << inst.num_cells() << " cell(s)\n";
    os << std::fixed << std::setprecision(2);
    os << "user  cell  gamma_dB  best_BS  best_gain_dB\n";
    for (int k = 0; k < inst.K; ++k)
    {
        int best = -1;
        double gain = 0;
        for (int l = 0; l < inst.L; ++l)
            if (inst.serves(l, k) && (best < 0 || inst.h[l][k].squaredNorm() > gain))
            {
                best = l;
                gain = inst.h[l][k].squaredNorm();
            }
        os << std::setw(4) << k << std::setw(6) << inst.cell_of_user[k] << std::setw(10)
           << 10 * std::log10(inst.gamma(k)) << std::setw(9) << best << std::setw(14)
           << (best >= 0 ? 10 * std::log10(gain) : -std::numeric_limits<double>::infinity()) << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

} // namespace hetnet
