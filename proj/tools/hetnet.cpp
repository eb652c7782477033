// hetnet: generate instances, run the solvers, sweep SINR targets.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hetnet/experiment.hpp"

using namespace hetnet;

namespace
{

struct Overrides
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> users, bs, antennas, cells, max_iters, drops, threads;
    std::vector<double> sinr_db;
    std::optional<double> epsilon, robust_theta;
    std::optional<long> solve_budget;
    std::string algos;
    std::optional<std::string> out;
};

void add_scenario_flags(CLI::App* app, Overrides& o)
{
    app->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "instance seed");
    app->add_option("--users", o.users, "number of users K");
    app->add_option("--bs", o.bs, "number of BSs (1..7)");
    app->add_option("--antennas", o.antennas, "antennas per BS");
    app->add_option("--cells", o.cells, "number of cells M");
    app->add_option("--sinr-db", o.sinr_db, "SINR target in dB (repeatable)");
    app->add_option("--out", o.out, "output directory");
}

void add_solver_flags(CLI::App* app, Overrides& o)
{
    app->add_option("--algos", o.algos, "comma-separated subset of benders,subgrad,oracle,rba,robust-benders");
    app->add_option("--epsilon", o.epsilon, "Benders tolerance");
    app->add_option("--max-iters", o.max_iters, "iteration cap for benders and subgrad");
    app->add_option("--solve-budget", o.solve_budget, "cap on conic solves per run");
    app->add_option("--robust-theta", o.robust_theta, "uncertainty radius xi_k = theta ||h_k||");
}

ExperimentConfig resolve(const Overrides& o)
{
    ExperimentConfig c;
    if (!o.config_path.empty())
    {
        std::ifstream in(o.config_path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        c = config_from_json(ss.str());
    }
    if (o.seed)
        c.seed = *o.seed;
    if (o.users)
        c.users = *o.users;
    if (o.bs)
        c.scenario.num_bs = *o.bs;
    if (o.antennas)
        c.scenario.antennas = *o.antennas;
    if (o.cells)
        c.scenario.cells = *o.cells;
    if (!o.sinr_db.empty())
        c.sinr_db = o.sinr_db;
    if (o.epsilon)
        c.epsilon = *o.epsilon;
    if (o.max_iters)
        c.max_iters = *o.max_iters;
    if (o.solve_budget)
        c.solve_budget = *o.solve_budget;
    if (o.robust_theta)
        c.robust_theta = *o.robust_theta;
    if (o.drops)
        c.drops = *o.drops;
    if (o.threads)
        c.threads = *o.threads;
    if (o.out)
        c.out = *o.out;
    if (!o.algos.empty())
    {
        c.algorithms.clear();
        std::stringstream ss(o.algos);
        for (std::string name; std::getline(ss, name, ',');)
            if (!name.empty())
                c.algorithms.push_back(name);
    }
    c.validate();
    return c;
}

std::ofstream open_out(const std::string& dir, const std::string& name)
{
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Joint BS activation and coordinated beamforming experiments"};
    app.require_subcommand(1);

    Overrides gen_o, run_o, sweep_o;
    std::string instance_path;

    auto* gen = app.add_subcommand("generate", "write a hexagonal-network instance");
    add_scenario_flags(gen, gen_o);

    auto* run = app.add_subcommand("run", "run algorithms on one instance");
    run->add_option("instance", instance_path, "instance JSON (generated from the config when omitted)")
        ->check(CLI::ExistingFile);
    add_scenario_flags(run, run_o);
    add_solver_flags(run, run_o);

    auto* sweep = app.add_subcommand("sweep", "mean power per target over seeded drops");
    add_scenario_flags(sweep, sweep_o);
    add_solver_flags(sweep, sweep_o);
    sweep->add_option("--drops", sweep_o.drops, "number of channel drops R");
    sweep->add_option("--threads", sweep_o.threads, "worker threads (0: hardware count)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try
    {
        if (gen->parsed())
        {
            const auto c = resolve(gen_o);
            const auto inst = generate_instance(c, c.seed);
            open_out(c.out, "instance.json") << to_json(inst);
            open_out(c.out, "config.json") << to_json(c);
            print_summary(std::cout, inst);
            std::cout << "wrote " << (std::filesystem::path(c.out) / "instance.json").string() << "\n";
            return 0;
        }
        if (run->parsed())
        {
            const auto c = resolve(run_o);
            const auto inst = instance_path.empty() ? generate_instance(c, c.seed) : read_instance(instance_path);
            std::filesystem::create_directories(c.out);
            const auto rows = run_algorithms(c, inst, &c.out);
            auto out = open_out(c.out, "results.csv");
            write_results_csv(out, rows);
            write_results_csv(std::cout, rows);
            const bool any = std::any_of(rows.begin(), rows.end(), [](const RunRow& r) { return r.feasible; });
            return any ? 0 : 2;
        }
        if (sweep->parsed())
        {
            const auto c = resolve(sweep_o);
            const auto cells = run_sweep(c);
            auto out = open_out(c.out, "sweep.csv");
            write_sweep_csv(out, cells);
            write_sweep_csv(std::cout, cells);
            const bool any = std::any_of(cells.begin(), cells.end(), [](const SweepCell& s) { return s.feasible > 0; });
            return any ? 0 : 2;
        }
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
