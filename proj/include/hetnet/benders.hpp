#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetnet/subproblem.hpp"

namespace hetnet
{

struct Cut
{
    enum class Kind
    {
        Optimality, // a0 >= coeff'a + constant
        Feasibility // coeff'a >= constant
    };
    Kind kind = Kind::Optimality;
    VecXd coeff;
    double constant = 0;
    int source_iteration = 0;

    /// Optimality: the bound coeff'a + constant on a0. Feasibility: coeff'a.
    double eval(const Activation& a) const;
    /// Feasibility cuts only.
    bool admits(const Activation& a) const { return eval(a) >= constant; }
};

const char* to_string(Cut::Kind kind);

/// a0 >= a'(pi - mu o P) + C1 with C1 = v(a_hat) + a_hat'(mu o P). BSs that are
/// off in a_hat get a multiplier large enough that any pattern switching them
/// on has a nonpositive cut value. Requires outcome.status == Optimal.
Cut make_optimality_cut(const NetworkInstance& inst, const Activation& a_hat, const ConicOutcome& outcome,
                        int iteration = 0);

/// a'(lambda o P) >= c2, where c2 is a lower bound on min_W sum_l lambda_l p_l(W).
Cut make_feasibility_cut(const NetworkInstance& inst, const VecXd& lambda, double c2, int iteration = 0);

struct MasterResult
{
    bool feasible = false;
    Activation a;
    double a0 = 0;
};

/// Exact minimiser of max(lo, max_j optimality_j(a)) over binary a admitted by
/// every feasibility cut; ties go to the lexicographically smallest a.
/// Infeasible when no pattern is admitted or the optimum exceeds hi.
MasterResult solve_master(const std::vector<Cut>& cuts, int L, double lo, double hi);

/// Upper end of the a0 box: sum_l (pi_l + kappa P_l).
double master_upper_bound(const NetworkInstance& inst, double kappa);

enum class BendersStatus
{
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
};

const char* to_string(BendersStatus status);

enum class FeasibilityConstant
{
    Resolve,  // weighted power minimisation with the certificate as weights
    ProbeDual // dual bound returned by the phase-1 probe
};

struct BendersOptions
{
    double epsilon = 1e-4;
    int max_iters = 200;
    double kappa = 4.0;
    long solve_budget = -1; // stop once this many conic solves are spent; < 0 means no cap
    FeasibilityConstant feasibility_constant = FeasibilityConstant::ProbeDual;
};

struct BendersTraceRow
{
    int iteration = 0;
    double lb = 0;
    double ub = 0;
    Cut::Kind kind = Cut::Kind::Optimality;
    std::string activation;
    SubproblemStatus status = SubproblemStatus::Optimal;
    double subproblem_value = 0; // v(a_hat) + a_hat'pi, NaN when infeasible
    long solves = 0;             // cumulative
    double millis = 0;
};

struct BendersResult
{
    BendersStatus status = BendersStatus::NumericalFailure;
    std::optional<BeamformingSolution> incumbent;
    double lb = 0;
    double ub = 0;
    int iterations = 0;
    long solves = 0;
    std::vector<Cut> cuts;
    std::vector<BendersTraceRow> trace;
    std::string message;
};

BendersResult run_benders(SubproblemOracle& oracle, const BendersOptions& options = {});

/// Header plus one line per row; the millis column is last.
void write_trace_csv(std::ostream& os, const std::vector<BendersTraceRow>& trace);

} // namespace hetnet
