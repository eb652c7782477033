#include "hetnet/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace hetnet
{

EnumerationReport enumerate_optimal(SubproblemOracle& oracle)
{
    const auto& inst = oracle.instance();
    if (inst.L > 24)
        throw std::invalid_argument("enumerate_optimal: L must be at most 24");
    const long solves_at_start = oracle.solves();
    const std::uint64_t count = std::uint64_t{1} << inst.L;

    EnumerationReport rep;
    rep.entries.resize(count);
    std::vector<std::uint64_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    // larger patterns first, so an infeasible one prunes all of its subsets
    std::stable_sort(order.begin(), order.end(),
                     [](std::uint64_t x, std::uint64_t y) { return std::popcount(x) > std::popcount(y); });
    std::vector<char> known_infeasible(count, 0);

    for (std::uint64_t mask : order)
    {
        auto& e = rep.entries[mask];
        e.a = activation_from_mask(mask, inst.L);
        e.value = std::numeric_limits<double>::quiet_NaN();
        if (known_infeasible[mask])
        {
            e.status = SubproblemStatus::Infeasible;
            e.pruned = true;
            continue;
        }
        const auto out = oracle.solve(e.a, false);
        e.status = out.status;
        if (out.status == SubproblemStatus::Optimal)
        {
            e.value = out.value;
            double full = out.value;
            for (int l = 0; l < inst.L; ++l)
                full += e.a[l] * inst.pi(l);
            if (!rep.feasible || full < rep.optimum)
            {
                rep.feasible = true;
                rep.optimum = full;
                rep.argmin = e.a;
            }
        }
        else if (out.status == SubproblemStatus::Infeasible)
        {
            for (std::uint64_t sub = mask;; sub = (sub - 1) & mask)
            {
                known_infeasible[sub] = 1;
                if (sub == 0)
                    break;
            }
        }
        else
            ++rep.failures;
    }
    rep.solves = oracle.solves() - solves_at_start;
    return rep;
}

EnumerationReport enumerate_optimal(const NetworkInstance& inst, double tol)
{
    NominalOracle oracle(inst, tol);
    return enumerate_optimal(oracle);
}

void write_report_csv(std::ostream& os, const EnumerationReport& report)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "activation,status,value\n" << std::setprecision(17);
    for (const auto& e : report.entries)
        os << bitstring(e.a) << ',' << (e.pruned ? "Pruned" : to_string(e.status)) << ',' << e.value << '\n';
    os.flags(flags);
    os.precision(prec);
}

RbaResult rba_baseline(SubproblemOracle& oracle, std::uint64_t seed, int max_draws)
{
    const auto& inst = oracle.instance();
    const long solves_at_start = oracle.solves();
    Rng rng(seed);
    RbaResult res;
    auto attempt = [&](const Activation& a) {
        const auto out = oracle.solve(a, false);
        if (out.status != SubproblemStatus::Optimal)
            return false;
        res.feasible = true;
        res.a = a;
        res.solution = out.solution;
        return true;
    };
    for (int d = 0; d < max_draws && !res.feasible; ++d)
    {
        Activation a(inst.L);
        for (auto& v : a)
            v = rng.bernoulli(0.5) ? 1 : 0;
        ++res.draws;
        attempt(a);
    }
    if (!res.feasible)
    {
        res.fallback = true;
        attempt(all_ones(inst.L));
    }
    res.solves = oracle.solves() - solves_at_start;
    return res;
}

RbaResult rba_baseline(const NetworkInstance& inst, std::uint64_t seed, double tol)
{
    NominalOracle oracle(inst, tol);
    return rba_baseline(oracle, seed);
}

} // namespace hetnet
