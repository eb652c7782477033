#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hetnet/subproblem.hpp"

namespace hetnet
{

struct EnumerationEntry
{
    Activation a;
    SubproblemStatus status = SubproblemStatus::NumericalFailure;
    double value = 0; // v(a), watts; NaN unless Optimal
    bool pruned = false; // below a known infeasible pattern, never solved
};

struct EnumerationReport
{
    std::vector<EnumerationEntry> entries; // indexed by activation_mask
    bool feasible = false;
    Activation argmin;
    double optimum = 0; // v(argmin) + argmin'pi
    long solves = 0;
    int failures = 0; // NumericalFailure entries
};

/// Exact optimum by solving the subproblem for every pattern, skipping
/// patterns that lie below an infeasible one. Requires L <= 24.
EnumerationReport enumerate_optimal(SubproblemOracle& oracle);
EnumerationReport enumerate_optimal(const NetworkInstance& inst, double tol = default_tol);

void write_report_csv(std::ostream& os, const EnumerationReport& report);

struct RbaResult
{
    bool feasible = false;
    Activation a;
    BeamformingSolution solution;
    int draws = 0; // random patterns tried
    bool fallback = false; // all-ones used after the draws
    long solves = 0;
};

/// Random BS association: a_l i.i.d. Bernoulli(1/2), redrawn up to max_draws
/// times until the subproblem is feasible, then all-ones.
RbaResult rba_baseline(SubproblemOracle& oracle, std::uint64_t seed, int max_draws = 50);
RbaResult rba_baseline(const NetworkInstance& inst, std::uint64_t seed, double tol = default_tol);

} // namespace hetnet
