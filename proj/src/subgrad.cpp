#include "hetnet/subgrad.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace hetnet
{

double StepSize::at(int j, const NetworkInstance& inst) const
{
    const double base = value > 0 ? value : 1.0 / inst.P.maxCoeff();
    return rule == Rule::Constant ? base : base / std::sqrt(j + 1.0);
}

Activation activation_from_duals(const NetworkInstance& inst, const VecXd& lambda)
{
    if (lambda.size() != inst.L)
        throw std::invalid_argument("lambda must have one entry per BS");
    Activation a(inst.L);
    for (int l = 0; l < inst.L; ++l)
        a[l] = inst.pi(l) <= lambda(l) * inst.P(l) ? 1 : 0;
    return a;
}

VecXd power_subgradient(const NetworkInstance& inst, const VecXd& tx_power, const Activation& a)
{
    VecXd g(inst.L);
    for (int l = 0; l < inst.L; ++l)
        g(l) = tx_power(l) - a[l] * inst.P(l);
    return g;
}

double dual_value(const NetworkInstance& inst, const VecXd& lambda, double c1)
{
    double d = c1;
    for (int l = 0; l < inst.L; ++l)
        d += std::min(0.0, inst.pi(l) - lambda(l) * inst.P(l));
    return d;
}

DualState subgradient_step(const NetworkInstance& inst, const DualState& state, const VecXd& tx_power,
                           const Activation& a)
{
    DualState next = state;
    const double s = state.step.at(state.j, inst);
    next.lambda = (state.lambda + s * power_subgradient(inst, tx_power, a)).cwiseMax(0.0);
    next.j = state.j + 1;
    return next;
}

const char* to_string(SubgradStatus status)
{
    switch (status)
    {
    case SubgradStatus::Converged: return "Converged";
    case SubgradStatus::IterationLimit: return "IterationLimit";
    case SubgradStatus::Infeasible: return "Infeasible";
    case SubgradStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

namespace
{

bool primal_feasible(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    for (int l = 0; l < inst.L; ++l)
        if (!sol.activation[l] && sol.tx_power(l) > 1e-9 * inst.P(l))
            return false;
    return max_cap_violation(inst, sol) <= 0;
}

} // namespace

SubgradResult run_subgradient(SubproblemOracle& oracle, const SubgradOptions& options)
{
    const auto& inst = oracle.instance();
    const long solves_at_start = oracle.solves();
    SubgradResult res;

    DualState state;
    state.step = options.step;
    state.lambda = options.lambda0 ? *options.lambda0 : VecXd(inst.pi.cwiseQuotient(inst.P));
    if (state.lambda.size() != inst.L || !(state.lambda.array() >= 0).all())
        throw std::invalid_argument("run_subgradient: lambda0 must be nonnegative with one entry per BS");
    res.best_dual = -std::numeric_limits<double>::infinity();

    BeamformingSolution last_w;
    Activation last_a;
    bool converged = false;
    for (int j = 0; j < options.max_iters; ++j)
    {
        if (options.solve_budget >= 0 && oracle.solves() - solves_at_start >= options.solve_budget)
            break;
        const auto w = oracle.weighted_min(VecXd::Ones(inst.L) + state.lambda);
        if (w.status == SubproblemStatus::SinrInfeasible)
        {
            res.status = SubgradStatus::Infeasible;
            res.message = "SINR targets cannot be met with every BS on";
            res.solves = oracle.solves() - solves_at_start;
            return res;
        }
        if (w.status != SubproblemStatus::Optimal)
        {
            res.status = SubgradStatus::NumericalFailure;
            res.message = "weighted power solve failed";
            res.solves = oracle.solves() - solves_at_start;
            return res;
        }
        const Activation a = activation_from_duals(inst, state.lambda);
        const double d = dual_value(inst, state.lambda, w.lower_bound);
        state.history.push_back(d);
        res.best_dual = std::max(res.best_dual, d);
        res.lambda_bound = std::max(res.lambda_bound, state.lambda.norm());

        const VecXd g = power_subgradient(inst, w.solution.tx_power, a);
        SubgradTraceRow row;
        row.j = j;
        row.dual_value = d;
        row.g_norm = g.norm();
        row.lambda_norm = state.lambda.norm();
        row.activation = bitstring(a);
        row.stepsize = state.step.at(state.j, inst);
        res.trace.push_back(row);

        last_w = w.solution;
        last_a = a;
        res.iterations = j + 1;
        const DualState next = subgradient_step(inst, state, w.solution.tx_power, a);
        const double change = (next.lambda - state.lambda).norm() / std::max(state.lambda.norm(), options.delta);
        state = next;
        if (change <= options.epsilon)
        {
            converged = true;
            break;
        }
    }
    res.lambda = state.lambda;
    res.dual_activation = last_a;
    if (last_a.empty())
        last_a = activation_from_duals(inst, state.lambda);

    // Step 3: keep (W, a) if it is already primal feasible, otherwise re-solve for a.
    if (last_w.w.size() > 0)
    {
        BeamformingSolution candidate = last_w;
        candidate.activation = last_a;
        finalize(inst, candidate);
        if (primal_feasible(inst, candidate) && min_sinr_slack(inst, candidate) >= -1e-6)
        {
            res.solution = candidate;
            res.status = converged ? SubgradStatus::Converged : SubgradStatus::IterationLimit;
            res.solves = oracle.solves() - solves_at_start;
            return res;
        }
    }

    res.restored = true;
    Activation a = last_a;
    std::vector<int> order;
    for (int l = 0; l < inst.L; ++l)
        if (!a[l])
            order.push_back(l);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return state.lambda(x) * inst.P(x) - inst.pi(x) > state.lambda(y) * inst.P(y) - inst.pi(y);
    });
    for (std::size_t next = 0;; ++next)
    {
        const auto out = oracle.solve(a, false);
        if (out.status == SubproblemStatus::Optimal)
        {
            if (res.solution && !(out.solution.objective < res.solution->objective))
                break;
            res.solution = out.solution;
            res.status = converged ? SubgradStatus::Converged : SubgradStatus::IterationLimit;
            if (!options.keep_improving || next == order.size())
                break;
            a[order[next]] = 1;
            ++res.added;
            continue;
        }
        if (res.solution)
            break;
        if (out.status != SubproblemStatus::Infeasible)
        {
            res.status = SubgradStatus::NumericalFailure;
            res.message = "restoration solve failed at " + bitstring(a);
            break;
        }
        if (next == order.size())
        {
            res.status = SubgradStatus::Infeasible;
            res.message = "no feasible activation found during restoration";
            break;
        }
        a[order[next]] = 1;
        ++res.added;
    }
    res.solves = oracle.solves() - solves_at_start;
    return res;
}

void write_trace_csv(std::ostream& os, const std::vector<SubgradTraceRow>& trace)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "j,dual_value,g_norm,lambda_norm,activation,stepsize\n" << std::setprecision(17);
    for (const auto& r : trace)
        os << r.j << ',' << r.dual_value << ',' << r.g_norm << ',' << r.lambda_norm << ',' << r.activation << ','
           << r.stepsize << '\n';
    os.flags(flags);
    os.precision(prec);
}

} // namespace hetnet
