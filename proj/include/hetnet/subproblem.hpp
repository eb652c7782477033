#pragma once

// Fixed-activation beamforming subproblem and the related power programs, all
// posed as second-order cone programs over real variables.
//
// Internally the beamformers are rescaled, w = sqrt(scale) x, and every channel
// is whitened by its noise level, so the cone programs are well conditioned
// regardless of the physical units. All reported values are in watts.

#include <limits>
#include <vector>

#include "hetnet/cone_program.hpp"
#include "hetnet/cone_solver.hpp"
#include "hetnet/model.hpp"

namespace hetnet
{

enum class SubproblemStatus
{
    Optimal,
    Infeasible,
    SinrInfeasible,
    NumericalFailure,
};

const char* to_string(SubproblemStatus status);

struct ConicOutcome
{
    SubproblemStatus status = SubproblemStatus::NumericalFailure;
    BeamformingSolution solution; // Optimal
    VecXd mu;                     // Optimal: duals of the power caps (0 for eliminated BSs)
    double value = std::numeric_limits<double>::quiet_NaN(); // v(a), watts

    // Infeasible: simplex certificate from the phase-1 probe
    VecXd lambda;
    double t_star = std::numeric_limits<double>::quiet_NaN();
    /// Certified lower bound on min_W sum_l lambda_l p_l(W) taken from the probe dual.
    double lambda_bound = std::numeric_limits<double>::quiet_NaN();

    int solves = 0;
};

struct ProbeOutcome
{
    SubproblemStatus status = SubproblemStatus::NumericalFailure; // Optimal, SinrInfeasible or NumericalFailure
    double t_star = std::numeric_limits<double>::quiet_NaN();
    VecXd lambda;
    double lambda_bound = std::numeric_limits<double>::quiet_NaN();
    int solves = 0;
};

struct WeightedOutcome
{
    SubproblemStatus status = SubproblemStatus::NumericalFailure; // Optimal, SinrInfeasible or NumericalFailure
    double value = std::numeric_limits<double>::quiet_NaN();       // primal objective, watts
    double lower_bound = std::numeric_limits<double>::quiet_NaN(); // dual objective, watts
    BeamformingSolution solution; // activation all-ones; tx_power per BS
    int solves = 0;
};

/// Variable map of a built program.
struct SubproblemLayout
{
    std::vector<std::vector<int>> offset; // offset[l][k]: first variable of w_lk, -1 if eliminated
    std::vector<int> power_var;           // epigraph p_l >= ||w_l||^2, -1 if BS l has no variables
    std::vector<int> cap_row;             // orthant row of the cap on p_l, -1 if none
    int t_var = -1;                       // probe level variable
    double scale = 1;                     // w = sqrt(scale) x, powers in units of scale
};

struct SubproblemProgram
{
    conic::ConeProgram<double> program;
    SubproblemLayout layout;
};

/// min sum_k ||w_k||^2 s.t. SINR_k >= gamma_k and sum_k ||w_lk||^2 <= a_l P_l.
/// Blocks of inactive BSs and of BS-user pairs in different cells are eliminated.
SubproblemProgram build_subproblem(const NetworkInstance& inst, const Activation& a);

/// min t s.t. W satisfies every SINR target and sum_k ||w_lk||^2 - t <= a_l P_l for all l.
/// No BS is eliminated (only the cell mask applies).
SubproblemProgram build_probe(const NetworkInstance& inst, const Activation& a);

/// min sum_l c_l sum_k ||w_lk||^2 s.t. every SINR target; no power caps.
SubproblemProgram build_weighted(const NetworkInstance& inst, const VecXd& weights);

/// Mean over users of gamma_k sigma_k^2 / sum of serving channel gains.
double power_scale(const NetworkInstance& inst);

/// Solver settings used for a relative accuracy tol.
conic::SolverSettings<double> settings_for(double tol);

constexpr double default_tol = 1e-7;

/// Solves the subproblem for a. When it is infeasible and certify is set, the
/// phase-1 probe runs as well to produce lambda (solves counts both).
ConicOutcome solve_subproblem(const NetworkInstance& inst, const Activation& a, double tol = default_tol,
                              bool certify = true);

ProbeOutcome infeasibility_probe(const NetworkInstance& inst, const Activation& a, double tol = default_tol);

WeightedOutcome weighted_power_min(const NetworkInstance& inst, const VecXd& weights, double tol = default_tol);

/// Beamformers held by x under layout (zero where eliminated).
CMatXd extract_beamformers(const NetworkInstance& inst, const SubproblemLayout& layout, const VecXd& x);

/// Conic solve statistics shared by the nominal and robust back ends.
class SubproblemOracle
{
public:
    virtual ~SubproblemOracle() = default;
    virtual const NetworkInstance& instance() const = 0;
    /// Fixed-activation subproblem; certify runs the probe on infeasibility.
    virtual ConicOutcome solve(const Activation& a, bool certify) = 0;
    ConicOutcome solve(const Activation& a) { return solve(a, true); }
    /// Weighted power minimisation without caps.
    virtual WeightedOutcome weighted_min(const VecXd& weights) = 0;
    long solves() const { return solves_; }

protected:
    long solves_ = 0;
};

class NominalOracle : public SubproblemOracle
{
public:
    explicit NominalOracle(const NetworkInstance& inst, double tol = default_tol) : inst_(inst), tol_(tol) {}
    const NetworkInstance& instance() const override { return inst_; }
    using SubproblemOracle::solve;
    ConicOutcome solve(const Activation& a, bool certify) override;
    WeightedOutcome weighted_min(const VecXd& weights) override;

private:
    const NetworkInstance& inst_;
    double tol_;
};

} // namespace hetnet
