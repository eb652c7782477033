#pragma once
// Experiment harness behind the command-line tool: configuration, single
// runs over a list of SINR targets, and multi-drop sweeps.
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetnet/model.hpp"

namespace hetnet
{

inline const std::vector<std::string>& known_algorithms()
{
    static const std::vector<std::string> names{"benders", "subgrad", "oracle", "rba", "robust-benders"};
    return names;
}

struct ExperimentConfig
{
    std::uint64_t seed = 0;
    int users = 6;
    HexnetParams scenario;
    std::vector<double> sinr_db{5.0};
    std::vector<std::string> algorithms{"benders", "oracle"};
    double epsilon = 1e-4;
    std::optional<int> max_iters; // per-algorithm default when unset
    long solve_budget = -1;       // < 0: unlimited
    double robust_theta = 0.01;
    int drops = 1;
    int threads = 0; // sweep workers; 0 picks the hardware count
    std::string out = "out";

    void validate() const;
};

/// Keys mirror the field names; scenario keys mirror HexnetParams.
/// Unknown keys and wrong types are reported with their path.
ExperimentConfig config_from_json(const std::string& text);
std::string to_json(const ExperimentConfig& config);

NetworkInstance generate_instance(const ExperimentConfig& config, std::uint64_t seed);

struct RunRow
{
    std::string algorithm;
    double sinr_db = 0;
    std::string status;
    bool feasible = false;
    double objective = 0; // total power, watts; NaN without a solution
    std::string activation;
    int iterations = 0;
    long solves = 0;
    double millis = 0;
};

/// Runs every configured algorithm at every target on inst (gamma is
/// overwritten per target). Trace files go to trace_dir when given.
std::vector<RunRow> run_algorithms(const ExperimentConfig& config, const NetworkInstance& inst,
                                   const std::string* trace_dir = nullptr);

/// The millis column is last so that stripping it leaves a reproducible body.
void write_results_csv(std::ostream& os, const std::vector<RunRow>& rows);

struct SweepCell
{
    double sinr_db = 0;
    std::string algorithm;
    double mean_power = 0; // over feasible drops; NaN when none
    double std_power = 0;
    int feasible = 0;
    int drops = 0;
    double mean_solves = 0;
};

/// Drops use seeds seed, seed + 1, ..., seed + drops - 1.
std::vector<SweepCell> run_sweep(const ExperimentConfig& config);

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells);

/// Human-readable instance summary.
void print_summary(std::ostream& os, const NetworkInstance& inst);

/// "5", "12.5", "-3" as used in file names.
std::string format_db(double db);

} // namespace hetnet
