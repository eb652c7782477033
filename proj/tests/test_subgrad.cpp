#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "hetnet/oracle.hpp"
#include "hetnet/subgrad.hpp"

using namespace hetnet;

TEST_CASE("activation from multipliers")
{
    auto inst = fixtures::small_instance(1, 3, 2);
    inst.pi << 1.0, 2.0, 3.0;
    inst.P << 10.0, 10.0, 10.0;
    VecXd lambda(3);
    lambda << 0.2, 0.1, 0.2;
    CHECK(activation_from_duals(inst, lambda) == Activation{1, 0, 0});
    // ties switch the BS on
    lambda << 0.1, 0.2, 0.3;
    CHECK(activation_from_duals(inst, lambda) == Activation{1, 1, 1});
    CHECK(activation_from_duals(inst, VecXd::Zero(3)) == Activation{0, 0, 0});
    CHECK_THROWS_AS(activation_from_duals(inst, VecXd::Zero(2)), std::invalid_argument);

    // a(lambda) minimises sum_l a_l (pi_l - lambda_l P_l) over binary a
    Rng rng(3);
    for (int t = 0; t < 100; ++t)
    {
        for (int l = 0; l < 3; ++l)
            lambda(l) = 0.5 * rng.uniform();
        const auto a = activation_from_duals(inst, lambda);
        double got = 0, best = 0;
        for (int l = 0; l < 3; ++l)
            got += a[l] * (inst.pi(l) - lambda(l) * inst.P(l));
        for (std::uint64_t m = 0; m < 8; ++m)
        {
            const auto b = activation_from_mask(m, 3);
            double v = 0;
            for (int l = 0; l < 3; ++l)
                v += b[l] * (inst.pi(l) - lambda(l) * inst.P(l));
            best = std::min(best, v);
        }
        CHECK(got == doctest::Approx(best).epsilon(1e-14));
        CHECK(dual_value(inst, lambda, 0.0) == doctest::Approx(best).epsilon(1e-14));
    }
}

TEST_CASE("step rules and the projected update")
{
    auto inst = fixtures::small_instance(1, 2, 2);
    inst.P << 4.0, 8.0;
    StepSize dim;
    CHECK(dim.at(0, inst) == doctest::Approx(1.0 / 8.0));
    CHECK(dim.at(3, inst) == doctest::Approx(1.0 / 16.0));
    StepSize con{StepSize::Rule::Constant, 0.5};
    CHECK(con.at(0, inst) == 0.5);
    CHECK(con.at(99, inst) == 0.5);

    DualState s;
    s.lambda = VecXd(2);
    s.lambda << 0.1, 0.3;
    s.step = con;
    VecXd p(2);
    p << 1.0, 2.0;
    // g = p - a o P = (1 - 4, 2 - 0)
    const auto next = subgradient_step(inst, s, p, {1, 0});
    CHECK(next.j == 1);
    CHECK(next.lambda(0) == 0.0); // 0.1 - 1.5 projected
    CHECK(next.lambda(1) == doctest::Approx(1.3));
    CHECK(power_subgradient(inst, p, {1, 1}) == VecXd((VecXd(2) << -3.0, -6.0).finished()));
}

TEST_CASE("first iterate follows the update rule")
{
    const auto inst = fixtures::small_instance(4, 4, 3);
    NominalOracle oracle(inst);
    SubgradOptions opt;
    opt.max_iters = 2;
    const auto res = run_subgradient(oracle, opt);
    REQUIRE(res.trace.size() == 2);

    const VecXd lambda0 = inst.pi.cwiseQuotient(inst.P);
    const auto w = weighted_power_min(inst, VecXd::Ones(inst.L) + lambda0);
    REQUIRE(w.status == SubproblemStatus::Optimal);
    const VecXd g = w.solution.tx_power - inst.P; // every BS on at lambda0
    const VecXd lambda1 = (lambda0 + g / inst.P.maxCoeff()).cwiseMax(0.0);
    CHECK(res.trace[0].lambda_norm == doctest::Approx(lambda0.norm()).epsilon(1e-12));
    CHECK(res.trace[0].activation == bitstring(all_ones(inst.L)));
    CHECK(res.trace[0].dual_value == doctest::Approx(w.lower_bound).epsilon(1e-9));
    CHECK(res.trace[1].lambda_norm == doctest::Approx(lambda1.norm()).epsilon(1e-6));
    CHECK(res.trace[1].stepsize == doctest::Approx(1.0 / (inst.P.maxCoeff() * std::sqrt(2.0))));
}

TEST_CASE("dual values never exceed the optimum")
{
    for (std::uint64_t seed : {2u, 7u})
    {
        const auto inst = fixtures::small_instance(seed, 4, 3, 8.0);
        const auto truth = enumerate_optimal(inst);
        REQUIRE(truth.feasible);
        Rng rng(seed);
        for (int t = 0; t < 8; ++t)
        {
            VecXd lambda(inst.L);
            for (int l = 0; l < inst.L; ++l)
                lambda(l) = 2 * rng.uniform() * inst.pi(l) / inst.P(l);
            const auto w = weighted_power_min(inst, VecXd::Ones(inst.L) + lambda);
            REQUIRE(w.status == SubproblemStatus::Optimal);
            CHECK(dual_value(inst, lambda, w.lower_bound) <= truth.optimum * (1 + 1e-7));
        }
        NominalOracle oracle(inst);
        SubgradOptions opt;
        opt.max_iters = 40;
        const auto res = run_subgradient(oracle, opt);
        CHECK(res.best_dual <= truth.optimum * (1 + 1e-7));
        REQUIRE(res.solution);
        CHECK(res.solution->objective >= truth.optimum * (1 - 1e-6));
    }
}

TEST_CASE("returned solution is primal feasible")
{
    for (std::uint64_t seed : {1u, 3u, 5u})
    {
        const auto inst = fixtures::small_instance(seed, 5, 4, 10.0);
        NominalOracle oracle(inst);
        SubgradOptions opt;
        opt.max_iters = 60;
        const auto res = run_subgradient(oracle, opt);
        REQUIRE(res.solution);
        const auto& sol = *res.solution;
        CHECK(min_sinr_slack(inst, sol) >= -1e-6);
        CHECK(max_cap_violation(inst, sol) <= 1e-9);
        for (int l = 0; l < inst.L; ++l)
            if (!sol.activation[l])
                CHECK(sol.tx_power(l) <= 1e-9 * inst.P(l));
        CHECK(res.solves == oracle.solves());
        CHECK(res.iterations <= 60);
    }
}

TEST_CASE("large initial multipliers start from an all-on feasible point")
{
    const auto inst = fixtures::small_instance(6, 4, 3);
    NominalOracle oracle(inst);
    SubgradOptions opt;
    opt.lambda0 = VecXd::Constant(inst.L, 1e3);
    opt.max_iters = 1;
    const auto res = run_subgradient(oracle, opt);
    REQUIRE(res.solution);
    CHECK_FALSE(res.restored);
    CHECK(res.dual_activation == all_ones(inst.L));
    CHECK(min_sinr_slack(inst, *res.solution) >= -1e-6);
}

TEST_CASE("constant steps keep the multipliers bounded")
{
    const auto inst = fixtures::small_instance(8, 3, 2);
    NominalOracle oracle(inst);
    SubgradOptions opt;
    opt.step = StepSize{StepSize::Rule::Constant, 0};
    opt.max_iters = 50;
    const auto res = run_subgradient(oracle, opt);
    // lambda stays within ||lambda0|| + s sum_j ||g_j|| and every g_l is bounded by P_l
    const double s = 1.0 / inst.P.maxCoeff();
    CHECK(res.lambda_bound <= inst.pi.cwiseQuotient(inst.P).norm() + 50 * s * inst.P.norm() * 1.0001);
    for (const auto& row : res.trace)
        CHECK(row.g_norm <= inst.P.norm() * 1.0001 + 1e-9);
}

TEST_CASE("greedy variants and budgets")
{
    const auto inst = fixtures::small_instance(9, 5, 3, 8.0);
    NominalOracle o1(inst), o2(inst);
    SubgradOptions opt;
    opt.max_iters = 30;
    const auto plain = run_subgradient(o1, opt);
    opt.keep_improving = true;
    const auto eager = run_subgradient(o2, opt);
    REQUIRE(plain.solution);
    REQUIRE(eager.solution);
    CHECK(eager.solution->objective <= plain.solution->objective * (1 + 1e-9));

    NominalOracle o3(inst);
    SubgradOptions tight;
    tight.solve_budget = 3;
    const auto capped = run_subgradient(o3, tight);
    CHECK(capped.iterations <= 3);
}

TEST_CASE("unreachable targets")
{
    const auto inst = fixtures::small_instance(0, 1, 3, 30.0);
    NominalOracle oracle(inst);
    const auto res = run_subgradient(oracle);
    CHECK(res.status == SubgradStatus::Infeasible);
    CHECK_FALSE(res.solution);
}

TEST_CASE("trace csv header")
{
    std::ostringstream os;
    write_trace_csv(os, std::vector<SubgradTraceRow>{SubgradTraceRow{}});
    CHECK(os.str().rfind("j,dual_value,g_norm,lambda_norm,activation,stepsize\n", 0) == 0);
}
