#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "hetnet/oracle.hpp"

using namespace hetnet;

TEST_CASE("enumeration equals an unpruned brute force")
{
    for (std::uint64_t seed : {1u, 4u, 12u})
    {
        const auto inst = fixtures::small_instance(seed, 4, 4, 12.0);
        const auto rep = enumerate_optimal(inst);
        bool any = false;
        double best = 0;
        for (std::uint64_t m = 0; m < 16; ++m)
        {
            const auto a = activation_from_mask(m, 4);
            const auto out = solve_subproblem(inst, a, default_tol, false);
            const auto& e = rep.entries[m];
            CHECK(e.a == a);
            if (out.status == SubproblemStatus::Optimal)
            {
                CHECK_FALSE(e.pruned);
                CHECK(e.value == doctest::Approx(out.value).epsilon(1e-9));
                const double cost = out.solution.objective;
                if (!any || cost < best)
                    best = cost;
                any = true;
            }
            else
                CHECK((e.pruned || e.status != SubproblemStatus::Optimal));
        }
        CHECK(rep.feasible == any);
        if (any)
        {
            CHECK(rep.optimum == doctest::Approx(best).epsilon(1e-9));
            CHECK(rep.entries[activation_mask(rep.argmin)].status == SubproblemStatus::Optimal);
        }
        CHECK(rep.solves <= 16 * 2);
        CHECK(rep.failures == 0);
    }
}

TEST_CASE("rba is deterministic and never beats the optimum")
{
    for (std::uint64_t seed : {2u, 6u, 9u})
    {
        const auto inst = fixtures::small_instance(seed, 5, 3, 10.0);
        const auto a = rba_baseline(inst, 17);
        const auto b = rba_baseline(inst, 17);
        REQUIRE(a.feasible == b.feasible);
        CHECK(a.a == b.a);
        CHECK(a.draws == b.draws);
        const auto truth = enumerate_optimal(inst);
        if (a.feasible)
        {
            CHECK(truth.feasible);
            CHECK(a.solution.objective >= truth.optimum * (1 - 1e-6));
            CHECK(min_sinr_slack(inst, a.solution) > -1e-6);
            CHECK(a.draws >= 1);
        }
    }
}

TEST_CASE("report csv lists every pattern")
{
    const auto inst = fixtures::small_instance(3, 3, 2);
    const auto rep = enumerate_optimal(inst);
    std::ostringstream os;
    write_report_csv(os, rep);
    int lines = 0;
    std::istringstream is(os.str());
    for (std::string line; std::getline(is, line);)
        ++lines;
    CHECK(lines == 1 + 8);
}
