#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetnet/subproblem.hpp"

namespace hetnet
{

struct StepSize
{
    enum class Rule
    {
        Constant,   // s(j) = value
        Diminishing // s(j) = value / sqrt(j + 1)
    };
    Rule rule = Rule::Diminishing;
    double value = 0; // 0 selects 1 / max_l P_l

    double at(int j, const NetworkInstance& inst) const;
};

struct DualState
{
    VecXd lambda;
    int j = 0;
    StepSize step;
    std::vector<double> history; // D(lambda(j))
};

/// a_l = 1 iff pi_l <= lambda_l P_l.
Activation activation_from_duals(const NetworkInstance& inst, const VecXd& lambda);

/// g_l = tx_power_l - a_l P_l.
VecXd power_subgradient(const NetworkInstance& inst, const VecXd& tx_power, const Activation& a);

/// D(lambda) = C1(lambda) + sum_l min(0, pi_l - lambda_l P_l).
double dual_value(const NetworkInstance& inst, const VecXd& lambda, double c1);

/// lambda <- max(0, lambda + s(j) g) and j <- j + 1.
DualState subgradient_step(const NetworkInstance& inst, const DualState& state, const VecXd& tx_power,
                           const Activation& a);

struct SubgradOptions
{
    double epsilon = 1e-4;
    int max_iters = 500;
    double delta = 1e-12;
    StepSize step;
    std::optional<VecXd> lambda0; // default pi / P
    long solve_budget = -1;
    bool keep_improving = false; // continue the greedy past the first feasible pattern
};

struct SubgradTraceRow
{
    int j = 0;
    double dual_value = 0;
    double g_norm = 0;
    double lambda_norm = 0;
    std::string activation;
    double stepsize = 0;
};

enum class SubgradStatus
{
    Converged,
    IterationLimit,
    Infeasible,
    NumericalFailure,
};

const char* to_string(SubgradStatus status);

struct SubgradResult
{
    SubgradStatus status = SubgradStatus::NumericalFailure;
    std::optional<BeamformingSolution> solution;
    Activation dual_activation; // a from the final multipliers, before restoration
    bool restored = false;      // beamformers re-solved for a fixed activation
    int added = 0;              // BSs switched on by the restoration fallback
    int iterations = 0;
    long solves = 0;
    double best_dual = 0;       // largest D(lambda(j)) seen
    double lambda_bound = 0;    // largest ||lambda(j)|| seen
    VecXd lambda;
    std::vector<SubgradTraceRow> trace;
    std::string message;
};

SubgradResult run_subgradient(SubproblemOracle& oracle, const SubgradOptions& options = {});

void write_trace_csv(std::ostream& os, const std::vector<SubgradTraceRow>& trace);

} // namespace hetnet
