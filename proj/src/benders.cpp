#include "hetnet/benders.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

namespace hetnet
{

double Cut::eval(const Activation& a) const
{
    double v = kind == Kind::Optimality ? constant : 0.0;
    for (Eigen::Index l = 0; l < coeff.size(); ++l)
        if (a[l])
            v += coeff(l);
    return v;
}

const char* to_string(Cut::Kind kind) { return kind == Cut::Kind::Optimality ? "optimality" : "feasibility"; }

const char* to_string(BendersStatus status)
{
    switch (status)
    {
    case BendersStatus::Optimal: return "Optimal";
    case BendersStatus::Infeasible: return "Infeasible";
    case BendersStatus::IterationLimit: return "IterationLimit";
    case BendersStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

Cut make_optimality_cut(const NetworkInstance& inst, const Activation& a_hat, const ConicOutcome& outcome,
                        int iteration)
{
    if (outcome.status != SubproblemStatus::Optimal)
        throw std::invalid_argument("optimality cut needs an optimal subproblem");
    Cut cut;
    cut.kind = Cut::Kind::Optimality;
    cut.source_iteration = iteration;
    cut.coeff = VecXd::Zero(inst.L);
    cut.constant = outcome.value;
    double positive = 0;
    for (int l = 0; l < inst.L; ++l)
        if (a_hat[l])
        {
            cut.coeff(l) = inst.pi(l) - outcome.mu(l) * inst.P(l);
            cut.constant += outcome.mu(l) * inst.P(l);
            positive += std::max(0.0, cut.coeff(l));
        }
    for (int l = 0; l < inst.L; ++l)
        if (!a_hat[l])
            cut.coeff(l) = -(cut.constant + positive);
    return cut;
}

Cut make_feasibility_cut(const NetworkInstance& inst, const VecXd& lambda, double c2, int iteration)
{
    Cut cut;
    cut.kind = Cut::Kind::Feasibility;
    cut.source_iteration = iteration;
    cut.coeff = lambda.cwiseProduct(inst.P);
    cut.constant = c2;
    return cut;
}

double master_upper_bound(const NetworkInstance& inst, double kappa)
{
    return inst.pi.sum() + kappa * inst.P.sum();
}

MasterResult solve_master(const std::vector<Cut>& cuts, int L, double lo, double hi)
{
    if (L < 1 || L > 24)
        throw std::invalid_argument("solve_master: L must be in 1..24");
    std::vector<const Cut*> opt, feas;
    for (const auto& c : cuts)
    {
        if (c.coeff.size() != L)
            throw std::invalid_argument("solve_master: cut length differs from L");
        (c.kind == Cut::Kind::Optimality ? opt : feas).push_back(&c);
    }

    // Gray-code walk keeps every cut's a-dependent part current with one update per step.
    std::vector<double> opt_val(opt.size(), 0.0), feas_val(feas.size(), 0.0);
    Activation a(L, 0);
    MasterResult best;
    const std::uint64_t count = std::uint64_t{1} << L;
    for (std::uint64_t i = 0; i < count; ++i)
    {
        if (i > 0)
        {
            const int bit = __builtin_ctzll(i);
            const double sign = a[bit] ? -1.0 : 1.0;
            a[bit] ^= 1;
            for (std::size_t j = 0; j < opt.size(); ++j)
                opt_val[j] += sign * opt[j]->coeff(bit);
            for (std::size_t j = 0; j < feas.size(); ++j)
                feas_val[j] += sign * feas[j]->coeff(bit);
        }
        bool admitted = true;
        for (std::size_t j = 0; j < feas.size() && admitted; ++j)
            admitted = feas_val[j] >= feas[j]->constant;
        if (!admitted)
            continue;
        double a0 = lo;
        for (std::size_t j = 0; j < opt.size(); ++j)
            a0 = std::max(a0, opt_val[j] + opt[j]->constant);
        if (!best.feasible || a0 < best.a0 || (a0 == best.a0 && a < best.a))
        {
            best.feasible = true;
            best.a = a;
            best.a0 = a0;
        }
    }
    if (best.feasible && best.a0 > hi)
        best.feasible = false;
    return best;
}

BendersResult run_benders(SubproblemOracle& oracle, const BendersOptions& options)
{
    const auto& inst = oracle.instance();
    if (!(options.epsilon >= 0))
        throw std::invalid_argument("run_benders: epsilon must be nonnegative");
    const auto start = std::chrono::steady_clock::now();
    const long solves_at_start = oracle.solves();
    const double hi = master_upper_bound(inst, options.kappa);

    BendersResult res;
    res.lb = 0;
    res.ub = std::numeric_limits<double>::infinity();
    Activation a = all_ones(inst.L);
    std::set<Activation> visited;

    auto finish = [&](BendersStatus status, std::string message = {}) {
        res.status = status;
        res.message = std::move(message);
        res.solves = oracle.solves() - solves_at_start;
        return res;
    };

    for (int it = 1; it <= options.max_iters; ++it)
    {
        if (options.solve_budget >= 0 && oracle.solves() - solves_at_start >= options.solve_budget)
            return finish(BendersStatus::IterationLimit, "solve budget exhausted");
        res.iterations = it;
        visited.insert(a);

        BendersTraceRow row;
        row.iteration = it;
        row.activation = bitstring(a);
        row.subproblem_value = std::numeric_limits<double>::quiet_NaN();

        const auto out = oracle.solve(a);
        row.status = out.status;
        bool converged = false;
        switch (out.status)
        {
        case SubproblemStatus::Optimal:
        {
            double pi_a = 0;
            for (int l = 0; l < inst.L; ++l)
                pi_a += a[l] * inst.pi(l);
            const double full = out.value + pi_a;
            row.subproblem_value = full;
            if (full < res.ub)
            {
                res.ub = full;
                res.incumbent = out.solution;
            }
            res.cuts.push_back(make_optimality_cut(inst, a, out, it));
            row.kind = Cut::Kind::Optimality;
            converged = full <= res.lb + options.epsilon;
            break;
        }
        case SubproblemStatus::Infeasible:
        {
            double c2 = out.lambda_bound;
            if (options.feasibility_constant == FeasibilityConstant::Resolve)
            {
                const auto w = oracle.weighted_min(out.lambda);
                if (w.status != SubproblemStatus::Optimal)
                    return finish(BendersStatus::NumericalFailure, "weighted power solve failed");
                c2 = w.lower_bound;
            }
            auto cut = make_feasibility_cut(inst, out.lambda, c2, it);
            if (cut.admits(a))
                return finish(BendersStatus::NumericalFailure, "feasibility cut does not separate " + bitstring(a));
            res.cuts.push_back(std::move(cut));
            row.kind = Cut::Kind::Feasibility;
            break;
        }
        case SubproblemStatus::SinrInfeasible:
            res.trace.push_back(row);
            return finish(BendersStatus::Infeasible, "SINR targets cannot be met with every BS on");
        case SubproblemStatus::NumericalFailure:
            res.trace.push_back(row);
            return finish(BendersStatus::NumericalFailure, "subproblem solve failed at " + bitstring(a));
        }

        auto stamp = [&]() {
            row.lb = res.lb;
            row.ub = res.ub;
            row.solves = oracle.solves() - solves_at_start;
            row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            res.trace.push_back(row);
        };

        if (converged)
        {
            stamp();
            return finish(BendersStatus::Optimal);
        }

        const auto master = solve_master(res.cuts, inst.L, 0.0, hi);
        if (!master.feasible)
        {
            stamp();
            if (res.incumbent)
                return finish(BendersStatus::NumericalFailure, "master infeasible despite an incumbent");
            return finish(BendersStatus::Infeasible, "feasibility cuts exclude every activation");
        }
        res.lb = std::max(res.lb, master.a0);
        stamp();
        if (res.ub <= master.a0 + options.epsilon)
            return finish(BendersStatus::Optimal);
        if (visited.count(master.a))
        {
            if (res.incumbent)
                return finish(BendersStatus::Optimal, "master repeated " + bitstring(master.a));
            return finish(BendersStatus::NumericalFailure, "master repeated " + bitstring(master.a));
        }
        a = master.a;
    }
    return finish(BendersStatus::IterationLimit, "iteration limit reached");
}

void write_trace_csv(std::ostream& os, const std::vector<BendersTraceRow>& trace)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "iteration,LB,UB,kind,activation,subproblem_value,cumulative_socp_solves,millis\n";
    os << std::setprecision(17);
    for (const auto& r : trace)
        os << r.iteration << ',' << r.lb << ',' << r.ub << ',' << to_string(r.kind) << ',' << r.activation << ','
           << r.subproblem_value << ',' << r.solves << ',' << std::setprecision(6) << r.millis << std::setprecision(17)
           << '\n';
    os.flags(flags);
    os.precision(prec);
}

} // namespace hetnet
