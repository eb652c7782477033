#include "hetnet/subproblem.hpp"

#include <cmath>
#include <stdexcept>

namespace hetnet
{

using conic::ConeSolver;
using conic::ConeStatus;
using Expr = conic::Affine<double>;

const char* to_string(SubproblemStatus status)
{
    switch (status)
    {
    case SubproblemStatus::Optimal: return "Optimal";
    case SubproblemStatus::Infeasible: return "Infeasible";
    case SubproblemStatus::SinrInfeasible: return "SinrInfeasible";
    case SubproblemStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

conic::SolverSettings<double> settings_for(double tol)
{
    conic::SolverSettings<double> s;
    s.reltol = tol / 10;
    s.abstol = tol / 10;
    s.feastol = std::min(1e-9, tol / 100);
    return s;
}

double power_scale(const NetworkInstance& inst)
{
    double total = 0;
    for (int k = 0; k < inst.K; ++k)
    {
        double gain = 0;
        for (int l = 0; l < inst.L; ++l)
            if (inst.serves(l, k))
                gain += inst.h[l][k].squaredNorm();
        if (gain > 0)
            total += inst.gamma(k) * inst.sigma2(k) / gain;
    }
    return total > 0 ? total / inst.K : 1.0;
}

namespace
{

enum class Kind
{
    Subproblem,
    Probe,
    Weighted,
};

// re += Re(g^H x_block), im += Im(g^H x_block) for an interleaved block at off
void add_inner(Expr& re, Expr& im, const CVecXd& g, int off, double factor)
{
    for (Eigen::Index n = 0; n < g.size(); ++n)
    {
        const double gr = factor * g(n).real(), gi = factor * g(n).imag();
        const int xr = off + 2 * static_cast<int>(n), xi = xr + 1;
        re.add(xr, gr).add(xi, gi);
        im.add(xi, gr).add(xr, -gi);
    }
}

SubproblemProgram build(const NetworkInstance& inst, const Activation* a, const VecXd* weights, Kind kind)
{
    inst.validate();
    if (a && (static_cast<int>(a->size()) != inst.L || !is_binary(*a)))
        throw std::invalid_argument("activation must be binary with one entry per BS");
    if (weights && weights->size() != inst.L)
        throw std::invalid_argument("weights must have one entry per BS");

    SubproblemProgram out;
    auto& lay = out.layout;
    lay.scale = power_scale(inst);
    const double s = lay.scale;
    conic::ProgramBuilder<double> b;

    lay.offset.assign(inst.L, std::vector<int>(inst.K, -1));
    lay.power_var.assign(inst.L, -1);
    lay.cap_row.assign(inst.L, -1);
    for (int l = 0; l < inst.L; ++l)
        for (int k = 0; k < inst.K; ++k)
            if (inst.serves(l, k) && (kind != Kind::Subproblem || (*a)[l]))
                lay.offset[l][k] = b.add_variables(2 * inst.N[l]);
    for (int l = 0; l < inst.L; ++l)
        for (int k = 0; k < inst.K; ++k)
            if (lay.offset[l][k] >= 0)
            {
                lay.power_var[l] = b.add_variables(1);
                break;
            }
    if (kind == Kind::Probe)
    {
        lay.t_var = b.add_variables(1);
        b.set_objective(lay.t_var, 1.0);
    }
    for (int l = 0; l < inst.L; ++l)
        if (lay.power_var[l] >= 0 && kind != Kind::Probe)
            b.set_objective(lay.power_var[l], kind == Kind::Weighted ? (*weights)(l) : 1.0);

    // SINR: Re(g_k^H x_k) / sqrt(gamma_k) >= || (g_k^H x_i)_{i != k}, 1 ||,  Im(g_k^H x_k) = 0
    for (int k = 0; k < inst.K; ++k)
    {
        const double whiten = std::sqrt(s / inst.sigma2(k));
        std::vector<Expr> cone;
        Expr signal, phase;
        bool has_vars = false;
        for (int l = 0; l < inst.L; ++l)
            if (lay.offset[l][k] >= 0)
            {
                add_inner(signal, phase, inst.h[l][k], lay.offset[l][k], whiten);
                has_vars = true;
            }
        signal *= 1.0 / std::sqrt(inst.gamma(k));
        cone.push_back(signal);
        for (int i = 0; i < inst.K; ++i)
        {
            if (i == k)
                continue;
            Expr re, im;
            for (int l = 0; l < inst.L; ++l)
                if (lay.offset[l][i] >= 0)
                    add_inner(re, im, inst.h[l][k], lay.offset[l][i], whiten);
            cone.push_back(re);
            cone.push_back(im);
        }
        cone.emplace_back(1.0);
        b.add_soc(std::move(cone));
        if (has_vars)
            b.add_equality(phase);
    }

    // p_l >= ||x_l||^2  as  ||(p_l - 1, 2 x_l)|| <= p_l + 1
    for (int l = 0; l < inst.L; ++l)
    {
        const int p = lay.power_var[l];
        if (p < 0)
            continue;
        std::vector<Expr> cone(2);
        cone[0].add(p, 1.0).constant = 1.0;
        cone[1].add(p, 1.0).constant = -1.0;
        for (int k = 0; k < inst.K; ++k)
        {
            const int off = lay.offset[l][k];
            if (off < 0)
                continue;
            for (int j = 0; j < 2 * inst.N[l]; ++j)
                cone.emplace_back().add(off + j, 2.0);
        }
        b.add_soc(std::move(cone));

        if (kind == Kind::Subproblem || kind == Kind::Probe)
        {
            Expr cap((*a)[l] * inst.P(l) / s);
            cap.add(p, -1.0);
            if (kind == Kind::Probe)
                cap.add(lay.t_var, 1.0);
            lay.cap_row[l] = b.add_nonneg(cap);
        }
    }

    out.program = b.build();
    return out;
}

} // namespace

SubproblemProgram build_subproblem(const NetworkInstance& inst, const Activation& a)
{
    return build(inst, &a, nullptr, Kind::Subproblem);
}

SubproblemProgram build_probe(const NetworkInstance& inst, const Activation& a)
{
    return build(inst, &a, nullptr, Kind::Probe);
}

SubproblemProgram build_weighted(const NetworkInstance& inst, const VecXd& weights)
{
    if (!(weights.array() >= 0).all())
        throw std::invalid_argument("weights must be nonnegative");
    return build(inst, nullptr, &weights, Kind::Weighted);
}

CMatXd extract_beamformers(const NetworkInstance& inst, const SubproblemLayout& layout, const VecXd& x)
{
    CMatXd w = CMatXd::Zero(inst.total_antennas(), inst.K);
    const double root = std::sqrt(layout.scale);
    for (int l = 0; l < inst.L; ++l)
    {
        const int row = inst.antenna_offset(l);
        for (int k = 0; k < inst.K; ++k)
        {
            const int off = layout.offset[l][k];
            if (off < 0)
                continue;
            for (int n = 0; n < inst.N[l]; ++n)
                w(row + n, k) = root * Complex(x(off + 2 * n), x(off + 2 * n + 1));
        }
    }
    return w;
}

ProbeOutcome infeasibility_probe(const NetworkInstance& inst, const Activation& a, double tol)
{
    ProbeOutcome out;
    const auto built = build_probe(inst, a);
    const auto sol = ConeSolver<double>(settings_for(tol)).solve(built.program);
    out.solves = 1;
    if (sol.status == ConeStatus::PrimalInfeasible)
    {
        out.status = SubproblemStatus::SinrInfeasible;
        return out;
    }
    if (sol.status != ConeStatus::Optimal)
        return out;
    const double s = built.layout.scale;
    VecXd raw = VecXd::Zero(inst.L);
    double capped = 0;
    for (int l = 0; l < inst.L; ++l)
        if (built.layout.cap_row[l] >= 0)
        {
            raw(l) = std::max(0.0, sol.z(built.layout.cap_row[l]));
            capped += raw(l) * a[l] * inst.P(l);
        }
    const double total = raw.sum();
    if (!(total > 0))
        return out;
    out.status = SubproblemStatus::Optimal;
    out.t_star = s * sol.primal_objective;
    out.lambda = raw / total;
    out.lambda_bound = (s * sol.dual_objective + capped) / total;
    return out;
}

ConicOutcome solve_subproblem(const NetworkInstance& inst, const Activation& a, double tol, bool certify)
{
    ConicOutcome out;
    const auto built = build_subproblem(inst, a);
    const auto& lay = built.layout;

    bool every_user_served = true;
    for (int k = 0; k < inst.K; ++k)
    {
        bool served = false;
        for (int l = 0; l < inst.L; ++l)
            served = served || lay.offset[l][k] >= 0;
        every_user_served = every_user_served && served;
    }

    bool infeasible = !every_user_served;
    if (every_user_served)
    {
        const auto sol = ConeSolver<double>(settings_for(tol)).solve(built.program);
        out.solves = 1;
        if (sol.status == ConeStatus::Optimal)
        {
            out.status = SubproblemStatus::Optimal;
            out.value = lay.scale * sol.primal_objective;
            out.mu = VecXd::Zero(inst.L);
            for (int l = 0; l < inst.L; ++l)
                if (lay.cap_row[l] >= 0)
                    out.mu(l) = std::max(0.0, sol.z(lay.cap_row[l]));
            out.solution.w = extract_beamformers(inst, lay, sol.x);
            out.solution.activation = a;
            finalize(inst, out.solution);
            return out;
        }
        if (sol.status != ConeStatus::PrimalInfeasible)
            return out;
        infeasible = true;
    }

    if (infeasible && !certify)
        out.status = SubproblemStatus::Infeasible;
    else if (infeasible)
    {
        const auto probe = infeasibility_probe(inst, a, tol);
        out.solves += probe.solves;
        out.status = probe.status;
        if (probe.status != SubproblemStatus::Optimal)
            return out;
        // a nonpositive phase-1 value contradicts the infeasibility verdict
        if (!(probe.t_star > 0))
        {
            out.status = SubproblemStatus::NumericalFailure;
            return out;
        }
        out.status = SubproblemStatus::Infeasible;
        out.lambda = probe.lambda;
        out.t_star = probe.t_star;
        out.lambda_bound = probe.lambda_bound;
    }
    return out;
}

WeightedOutcome weighted_power_min(const NetworkInstance& inst, const VecXd& weights, double tol)
{
    WeightedOutcome out;
    const auto built = build_weighted(inst, weights);
    const auto sol = ConeSolver<double>(settings_for(tol)).solve(built.program);
    out.solves = 1;
    if (sol.status == ConeStatus::PrimalInfeasible)
    {
        out.status = SubproblemStatus::SinrInfeasible;
        return out;
    }
    if (sol.status != ConeStatus::Optimal)
        return out;
    out.status = SubproblemStatus::Optimal;
    out.value = built.layout.scale * sol.primal_objective;
    out.lower_bound = built.layout.scale * sol.dual_objective;
    out.solution.w = extract_beamformers(inst, built.layout, sol.x);
    out.solution.activation = all_ones(inst.L);
    finalize(inst, out.solution);
    return out;
}

ConicOutcome NominalOracle::solve(const Activation& a, bool certify)
{
    auto out = solve_subproblem(inst_, a, tol_, certify);
    solves_ += out.solves;
    return out;
}

WeightedOutcome NominalOracle::weighted_min(const VecXd& weights)
{
    auto out = weighted_power_min(inst_, weights, tol_);
    solves_ += out.solves;
    return out;
}

} // namespace hetnet
