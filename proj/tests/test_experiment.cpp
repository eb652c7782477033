#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "fixtures.hpp"
#include "hetnet/experiment.hpp"

using namespace hetnet;
namespace fs = std::filesystem;

namespace
{

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.seed = 3;
    c.users = 3;
    c.scenario.num_bs = 4;
    c.sinr_db = {5.0, 8.0};
    return c;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// CSV text with the trailing millis column removed from every line.
std::string without_millis(const std::string& csv)
{
    std::istringstream is(csv);
    std::string out;
    for (std::string line; std::getline(is, line);)
        out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

int run_cli(const std::string& args)
{
    const int rc = std::system((std::string(HETNET_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("config parsing reports the offending field")
{
    CHECK_THROWS_WITH_AS(config_from_json(R"({"usres": 4})"), "config: unknown field 'usres'", std::invalid_argument);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"scenario": {"num_bs": 4, "foo": 1}})"),
                         "config: unknown field 'scenario.foo'", std::invalid_argument);
    try
    {
        config_from_json(R"({"users": "six"})");
        FAIL("expected a type error");
    }
    catch (const std::invalid_argument& e)
    {
        CHECK(std::string(e.what()).rfind("config: field 'users'", 0) == 0);
    }
    try
    {
        config_from_json("{\n  \"users\": 4,\n  oops\n}");
        FAIL("expected a parse error");
    }
    catch (const std::invalid_argument& e)
    {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from_json(R"({"algorithms": []})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"algorithms": ["simplex"]})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"sinr_db": []})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"scenario": {"num_bs": 9}})"), std::invalid_argument);
}

TEST_CASE("config round trip")
{
    auto c = small_config();
    c.max_iters = 17;
    c.solve_budget = 40;
    c.algorithms = {"subgrad", "rba"};
    const auto text = to_json(c);
    CHECK(to_json(config_from_json(text)) == text);
    const auto back = config_from_json(text);
    CHECK(back.max_iters == 17);
    CHECK(back.scenario.num_bs == 4);
    CHECK(back.sinr_db == std::vector<double>{5.0, 8.0});
}

TEST_CASE("oracle and Benders agree and RBA is never better")
{
    auto c = small_config();
    c.algorithms = {"benders", "oracle", "rba", "subgrad"};
    const auto inst = generate_instance(c, c.seed);
    const auto rows = run_algorithms(c, inst);
    REQUIRE(rows.size() == 8);
    for (std::size_t t = 0; t < 2; ++t)
    {
        const auto& b = rows[4 * t];
        const auto& o = rows[4 * t + 1];
        const auto& r = rows[4 * t + 2];
        const auto& s = rows[4 * t + 3];
        CHECK(b.sinr_db == c.sinr_db[t]);
        REQUIRE(o.feasible);
        CHECK(b.feasible);
        CHECK(b.objective <= o.objective + c.epsilon + 1e-6);
        CHECK(b.objective >= o.objective - 1e-6);
        if (r.feasible)
            CHECK(r.objective >= o.objective * (1 - 1e-6));
        if (s.feasible)
            CHECK(s.objective >= o.objective * (1 - 1e-6));
        CHECK(o.solves >= 1);
    }
}

TEST_CASE("budgeted runs stop early")
{
    auto c = small_config();
    c.sinr_db = {8.0};
    c.algorithms = {"benders"};
    c.solve_budget = 1;
    const auto rows = run_algorithms(c, generate_instance(c, c.seed));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].solves <= 2);
    CHECK((rows[0].status == "IterationLimit" || rows[0].status == "Optimal"));
}

TEST_CASE("results and traces are reproducible")
{
    auto c = small_config();
    c.algorithms = {"benders", "subgrad", "oracle"};
    c.max_iters = 20;
    const fs::path dir = fs::temp_directory_path() / "hetnet_experiment_test";
    fs::remove_all(dir);
    std::string first;
    for (int pass = 0; pass < 2; ++pass)
    {
        const auto sub = (dir / std::to_string(pass)).string();
        fs::create_directories(sub);
        const auto rows = run_algorithms(c, generate_instance(c, c.seed), &sub);
        std::ostringstream os;
        write_results_csv(os, rows);
        const auto body = without_millis(os.str());
        if (pass == 0)
            first = body;
        else
            CHECK(body == first);
    }
    for (const auto& name : {"subgrad_5dB.csv", "oracle_8dB.csv"})
        CHECK(slurp(dir / "0" / name) == slurp(dir / "1" / name));
    CHECK(without_millis(slurp(dir / "0" / "benders_5dB.csv")) == without_millis(slurp(dir / "1" / "benders_5dB.csv")));
    CHECK(first.rfind("algorithm,sinr_db,status,feasible,objective,activation,iterations,solves\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("a one-drop sweep equals a single run")
{
    auto c = small_config();
    c.algorithms = {"oracle"};
    c.drops = 1;
    const auto cells = run_sweep(c);
    const auto rows = run_algorithms(c, generate_instance(c, c.seed));
    REQUIRE(cells.size() == rows.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
    {
        CHECK(cells[i].mean_power == rows[i].objective);
        CHECK(cells[i].std_power == 0.0);
        CHECK(cells[i].feasible == 1);
        CHECK(cells[i].mean_solves == static_cast<double>(rows[i].solves));
    }

    c.drops = 3;
    c.threads = 2;
    const auto threaded = run_sweep(c);
    c.threads = 1;
    const auto serial = run_sweep(c);
    std::ostringstream a, b;
    write_sweep_csv(a, threaded);
    write_sweep_csv(b, serial);
    CHECK(a.str() == b.str());
}

TEST_CASE("command line exit codes")
{
    const fs::path dir = fs::temp_directory_path() / "hetnet_cli_test";
    fs::remove_all(dir);
    const std::string out = " --out " + dir.string();
    CHECK(run_cli("generate --seed 1 --bs 3 --users 2" + out) == 0);
    CHECK(fs::exists(dir / "instance.json"));
    CHECK(fs::exists(dir / "config.json"));
    CHECK(run_cli("run " + (dir / "instance.json").string() + " --algos oracle --sinr-db 5" + out) == 0);
    CHECK(fs::exists(dir / "results.csv"));
    CHECK(run_cli("run --bs 1 --users 3 --sinr-db 30 --algos benders" + out) == 2);
    CHECK(run_cli("run --algos nonsense" + out) == 1);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("--help") == 0);
    fs::remove_all(dir);
}
