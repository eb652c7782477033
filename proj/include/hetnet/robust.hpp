#pragma once
// Worst-case SINR design over Euclidean channel-error balls. For a fixed
// activation the S-procedure turns every robust SINR constraint into one
// Hermitian LMI; dropping rank(X_k) = 1 leaves an SDP. Hermitian blocks are
// posed over the reals through [[Re M, -Im M], [Im M, Re M]] >= 0.
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetnet/subproblem.hpp"

namespace hetnet
{

struct RobustInstance
{
    NetworkInstance base;                       // h holds the realised channels
    std::vector<std::vector<CVecXd>> h_tilde;   // estimates, same layout as base.h
    VecXd xi;                                   // per-user radius on the stacked error

    void validate() const;
    CVecXd stacked_estimate(int k) const;
    /// base with h replaced by the estimates.
    NetworkInstance nominal() const;
};

/// Estimates equal to the channels, xi_k = theta ||h_k||.
RobustInstance make_robust(const NetworkInstance& inst, double theta);

std::string to_json(const RobustInstance& rinst);
RobustInstance robust_from_json(const std::string& text);
void write_instance(const std::string& path, const RobustInstance& rinst);
RobustInstance read_robust_instance(const std::string& path);

/// Hermitian matrix variable of order n: n(n+1)/2 real parts (lower triangle,
/// svec order) followed by n(n-1)/2 imaginary parts (strict lower triangle).
struct HermitianBlock
{
    int offset = -1;
    int order = 0;
    std::vector<int> antennas; // stacked antenna index of each row

    static int num_vars(int order) { return order * order; }
    int re(int r, int c) const; // r >= c
    int im(int r, int c) const; // r > c
};

struct RobustLayout
{
    std::vector<HermitianBlock> X; // per user
    std::vector<int> tau_var;      // -1 where xi_k = 0
    std::vector<int> cap_row;      // orthant row of BS l's cap, -1 if none
    int t_var = -1;
    double scale = 1;              // X = scale * Xhat
};

struct RobustProgram
{
    conic::ConeProgram<double> program;
    RobustLayout layout;
};

/// min sum_k tr(X_k) s.t. Gamma_k(X, tau_k) >= 0, X_k >= 0, tau_k >= 0 and
/// sum_k tr(B_l X_k) <= a_l P_l. Inactive BSs are eliminated. A zero radius
/// replaces Gamma_k by the scalar row h^H Y_k h >= sigma^2.
RobustProgram build_robust_subproblem(const RobustInstance& rinst, const Activation& a);
/// Level probe: min t with sum_k tr(B_l X_k) - t <= a_l P_l for every BS.
RobustProgram build_robust_probe(const RobustInstance& rinst, const Activation& a);
/// min sum_l c_l sum_k tr(B_l X_k) without caps.
RobustProgram build_robust_weighted(const RobustInstance& rinst, const VecXd& weights);

/// X_k of a solved program in watts, over the full stacked antenna space.
std::vector<CMatXd> extract_covariances(const NetworkInstance& inst, const RobustLayout& layout, const VecXd& x);

/// sqrt(lambda_1) u_1 when lambda_2 / lambda_1 <= tol_ratio.
std::optional<CVecXd> extract_rank_one(const CMatXd& X, double tol_ratio = 1e-6);

/// min over ||d|| <= xi of (h + d)^H Q (h + d), Q Hermitian.
double worst_case_quadratic(const CMatXd& Q, const CVecXd& h, double xi);

/// min over the ball of |(h+d)^H w_k|^2 / gamma_k - sum_{i != k} |(h+d)^H w_i|^2 - sigma_k^2.
double worst_case_margin(const RobustInstance& rinst, const CMatXd& w, int k);

/// Smallest c > 0 such that c w meets every worst-case SINR constraint;
/// nullopt when some user cannot be fixed by scaling.
std::optional<double> robust_rescale(const RobustInstance& rinst, const CMatXd& w);

enum class Recovery
{
    RankOne,
    Rounded,
    Failed,
};

const char* to_string(Recovery recovery);

/// Gaussian candidates with covariance X_k, each rescaled to worst-case
/// feasibility; the cheapest candidate that respects the caps is kept.
std::optional<BeamformingSolution> randomized_rounding(const RobustInstance& rinst, const Activation& a,
                                                       const std::vector<CMatXd>& X, int samples,
                                                       std::uint64_t seed);

struct RobustSolution
{
    SubproblemStatus status = SubproblemStatus::NumericalFailure;
    std::vector<CMatXd> X;
    VecXd tau;                     // normalised units of the program
    double objective = 0;          // sum_k tr(X_k), watts
    VecXd rank_ratio;              // lambda_2 / lambda_1 per user
    Recovery recovery = Recovery::Failed;
    std::optional<BeamformingSolution> beamformers;
    VecXd mu;                      // cap duals, 0 for eliminated BSs
    // Infeasible: probe certificate
    VecXd lambda;
    double t_star = std::numeric_limits<double>::quiet_NaN();
    double lambda_bound = std::numeric_limits<double>::quiet_NaN();
    int solves = 0;
};

struct RobustOptions
{
    double tol = default_tol;
    double rank_tol = 1e-6;
    int rounding_samples = 200;
    std::uint64_t rounding_seed = 1;
};

RobustSolution solve_robust_fixed(const RobustInstance& rinst, const Activation& a, const RobustOptions& options = {},
                                  bool certify = true);

/// Subproblem oracle backed by the robust SDP. The reported value is the SDP
/// objective; the solution holds the recovered beamformers.
class RobustOracle : public SubproblemOracle
{
public:
    explicit RobustOracle(const RobustInstance& rinst, RobustOptions options = {})
        : rinst_(rinst), options_(options)
    {
    }
    const NetworkInstance& instance() const override { return rinst_.base; }
    using SubproblemOracle::solve;
    ConicOutcome solve(const Activation& a, bool certify) override;
    WeightedOutcome weighted_min(const VecXd& weights) override;
    const RobustSolution& last() const { return last_; }

private:
    const RobustInstance& rinst_;
    RobustOptions options_;
    RobustSolution last_;
};

struct MonteCarloReport
{
    int samples = 0;
    int violations = 0;        // SINR_k < gamma_k (1 - slack)
    double worst_ratio = 0;    // min over samples of SINR_k / gamma_k
};

/// Draws samples_per_user errors uniformly in each ball and evaluates the SINR.
MonteCarloReport monte_carlo_check(const RobustInstance& rinst, const BeamformingSolution& sol, int samples_per_user,
                                   std::uint64_t seed, double slack = 1e-6);

} // namespace hetnet
