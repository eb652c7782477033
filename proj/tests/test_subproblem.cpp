#include <doctest.h>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "hetnet/subproblem.hpp"

using namespace hetnet;

namespace
{

// Minimum total power for full coordination over the antennas of the BSs on
// in a, without caps, by the uplink-downlink duality fixed point:
//   lambda_k = 1 / ((1 + 1/gamma_k) g_k^H (I + sum_i lambda_i g_i g_i^H)^-1 g_k),  g = h / sigma,
// then the optimal value is sum_k lambda_k.
double duality_power(const NetworkInstance& inst, const Activation& a)
{
    std::vector<int> rows;
    for (int l = 0; l < inst.L; ++l)
        if (a[l])
            for (int n = 0; n < inst.N[l]; ++n)
                rows.push_back(inst.antenna_offset(l) + n);
    const int n = static_cast<int>(rows.size());
    std::vector<CVecXd> g(inst.K, CVecXd(n));
    for (int k = 0; k < inst.K; ++k)
    {
        const CVecXd hk = inst.stacked_channel(k);
        for (int i = 0; i < n; ++i)
            g[k](i) = hk(rows[i]) / std::sqrt(inst.sigma2(k));
    }
    VecXd lambda = VecXd::Zero(inst.K);
    for (int it = 0; it < 5000; ++it)
    {
        CMatXd S = CMatXd::Identity(n, n);
        for (int k = 0; k < inst.K; ++k)
            S += lambda(k) * g[k] * g[k].adjoint();
        Eigen::LDLT<CMatXd> ldlt(S);
        VecXd next(inst.K);
        for (int k = 0; k < inst.K; ++k)
            next(k) = 1.0 / ((1.0 + 1.0 / inst.gamma(k)) * std::real(g[k].dot(ldlt.solve(g[k]))));
        const double change = (next - lambda).norm() / next.norm();
        lambda = next;
        if (change < 1e-14)
            break;
    }
    return lambda.sum();
}

} // namespace

TEST_CASE("single BS, single user: matched filter at gamma sigma^2 / |h|^2")
{
    CVecXd h(3);
    h << Complex(0.3, -0.2), Complex(-1.1, 0.4), Complex(0.05, 0.7);
    auto inst = fixtures::bare_instance({h}, 2.5);
    inst.sigma2(0) = 0.7;
    const auto out = solve_subproblem(inst, {1});
    REQUIRE(out.status == SubproblemStatus::Optimal);
    const double expected = 2.5 * 0.7 / h.squaredNorm();
    CHECK(fixtures::rel_diff(out.value, expected) < 1e-6);
    const CVecXd w = out.solution.w.col(0);
    CHECK(std::abs(h.dot(w)) / (h.norm() * w.norm()) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(out.mu(0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("physical-scale single link")
{
    // 43 dBm cap, -143 dBm noise, a -120 dB link at 5 dB
    CVecXd h(2);
    h << Complex(1e-6, 0), Complex(0, 0);
    auto inst = fixtures::bare_instance({h}, db_to_linear(5.0), dbm_to_watts(43.0), 0.625);
    inst.sigma2(0) = dbm_to_watts(-143.0);
    const auto out = solve_subproblem(inst, {1});
    REQUIRE(out.status == SubproblemStatus::Optimal);
    CHECK(fixtures::rel_diff(out.value, db_to_linear(5.0) * dbm_to_watts(-143.0) / 1e-12) < 1e-6);
}

TEST_CASE("multiuser optimum matches the duality fixed point")
{
    for (std::uint64_t seed : {1u, 2u, 5u, 9u})
    {
        const auto inst = fixtures::small_instance(seed, 4, 3, 10.0);
        for (std::uint64_t mask : {0b1111u, 0b0111u, 0b1010u})
        {
            const auto a = activation_from_mask(mask, inst.L);
            const auto out = solve_subproblem(inst, a);
            if (out.status != SubproblemStatus::Optimal)
                continue;
            const double oracle = duality_power(inst, a);
            CHECK(fixtures::rel_diff(out.value, oracle) < 1e-5);
            CHECK(min_sinr_slack(inst, out.solution) > -1e-6);
            CHECK(max_cap_violation(inst, out.solution) <= 0);
            CHECK(out.solution.objective == doctest::Approx(out.value + inst.pi.dot(VecXd::Ones(inst.L).cwiseProduct(
                                                                            Eigen::Map<const Eigen::VectorXi>(a.data(), inst.L).cast<double>()))));
        }
    }
}

TEST_CASE("inactive BSs carry nothing and caps are respected")
{
    const auto inst = fixtures::small_instance(4, 5, 3);
    const Activation a{1, 0, 1, 1, 0};
    const auto out = solve_subproblem(inst, a);
    REQUIRE(out.status == SubproblemStatus::Optimal);
    for (int l = 0; l < inst.L; ++l)
        if (!a[l])
        {
            CHECK(out.solution.w.middleRows(inst.antenna_offset(l), inst.N[l]).norm() == 0.0);
            CHECK(out.mu(l) == 0.0);
        }
    CHECK((out.mu.array() >= 0).all());
}

TEST_CASE("binding cap yields a positive multiplier")
{
    CVecXd h1(2), h2(2);
    h1 << Complex(1, 0), Complex(0.2, 0);
    h2 << Complex(0.1, 0), Complex(1, 0);
    auto inst = fixtures::bare_instance({h1}, 1.0);
    inst.L = 2;
    inst.N = {2, 2};
    inst.h = {{h1}, {h2}};
    inst.P = VecXd::Constant(2, 1e6);
    inst.pi = VecXd::Ones(2);
    inst.cell_of_bs = {0, 0};
    inst.validate();
    const auto free = solve_subproblem(inst, {1, 1});
    REQUIRE(free.status == SubproblemStatus::Optimal);
    // cap BS 0 well below its unconstrained share
    inst.P(0) = 0.25 * free.solution.tx_power(0);
    const auto capped = solve_subproblem(inst, {1, 1});
    REQUIRE(capped.status == SubproblemStatus::Optimal);
    CHECK(capped.value > free.value);
    CHECK(capped.mu(0) > 1e-6);
    CHECK(capped.solution.tx_power(0) == doctest::Approx(inst.P(0)).epsilon(1e-5));
    // first-order sensitivity: d v / d P_0 = -mu_0
    auto nudged = inst;
    nudged.P(0) *= 1.001;
    const auto after = solve_subproblem(nudged, {1, 1});
    const double slope = (after.value - capped.value) / (nudged.P(0) - inst.P(0));
    CHECK(slope == doctest::Approx(-capped.mu(0)).epsilon(0.02));
}

TEST_CASE("infeasible activation: certificate from the probe")
{
    const auto inst = fixtures::small_instance(2, 4, 3);
    const auto none = solve_subproblem(inst, all_zeros(inst.L));
    CHECK(none.status == SubproblemStatus::Infeasible);
    CHECK(none.solves == 1); // no user served: the SOCP is skipped, only the probe runs
    REQUIRE(none.lambda.size() == inst.L);
    CHECK(none.lambda.sum() == doctest::Approx(1.0));
    CHECK((none.lambda.array() >= 0).all());
    CHECK(none.t_star > 0);

    const auto quiet = solve_subproblem(inst, all_zeros(inst.L), default_tol, false);
    CHECK(quiet.status == SubproblemStatus::Infeasible);
    CHECK(quiet.solves == 0);
    CHECK(quiet.lambda.size() == 0);
}

TEST_CASE("too many users for one antenna pair at a high target")
{
    CVecXd h1(2), h2(2), h3(2);
    h1 << Complex(1, 0), Complex(0, 0);
    h2 << Complex(0, 0), Complex(1, 0);
    h3 << Complex(0.7, 0), Complex(0.7, 0);
    const auto inst = fixtures::bare_instance({h1, h2, h3}, 1000.0);
    const auto out = solve_subproblem(inst, {1});
    CHECK(out.status == SubproblemStatus::SinrInfeasible);
    const auto probe = infeasibility_probe(inst, {1});
    CHECK(probe.status == SubproblemStatus::SinrInfeasible);
}

TEST_CASE("weighted minimisation")
{
    const auto inst = fixtures::small_instance(6, 4, 3);
    const auto plain = weighted_power_min(inst, VecXd::Ones(inst.L));
    const auto sub = solve_subproblem(inst, all_ones(inst.L));
    REQUIRE(plain.status == SubproblemStatus::Optimal);
    REQUIRE(sub.status == SubproblemStatus::Optimal);
    CHECK(fixtures::rel_diff(plain.value, sub.value) < 1e-6);
    CHECK(plain.lower_bound <= plain.value * (1 + 1e-9));
    CHECK(fixtures::rel_diff(plain.lower_bound, plain.value) < 1e-6);
    CHECK(plain.solution.tx_power.sum() == doctest::Approx(plain.value).epsilon(1e-6));

    // a heavy weight pushes power away from BS 0
    VecXd w = VecXd::Ones(inst.L);
    w(0) = 50;
    const auto skew = weighted_power_min(inst, w);
    REQUIRE(skew.status == SubproblemStatus::Optimal);
    CHECK(skew.solution.tx_power(0) <= plain.solution.tx_power(0) * (1 + 1e-6));
    CHECK(skew.value == doctest::Approx(w.dot(skew.solution.tx_power)).epsilon(1e-6));
    CHECK_THROWS_AS(weighted_power_min(inst, -VecXd::Ones(inst.L)), std::invalid_argument);
}

TEST_CASE("builder layout")
{
    const auto inst = fixtures::small_instance(3, 3, 2, 5.0, 1);
    const auto built = build_subproblem(inst, {1, 0, 1});
    const auto& lay = built.layout;
    CHECK(lay.power_var[1] == -1);
    CHECK(lay.cap_row[1] == -1);
    CHECK(lay.offset[1][0] == -1);
    CHECK(lay.offset[0][0] >= 0);
    // two users x two active BSs x 2 antennas x (re, im) + two epigraph powers
    CHECK(built.program.c.size() == 2 * 2 * 2 * 2 + 2);
    built.program.validate();
    CHECK(built.layout.scale > 0);
    CHECK_THROWS_AS(build_subproblem(inst, {1, 2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(build_subproblem(inst, {1, 0}), std::invalid_argument);
}

TEST_CASE("oracle counts solves")
{
    const auto inst = fixtures::small_instance(7, 3, 2);
    NominalOracle oracle(inst);
    oracle.solve(all_ones(3));
    oracle.solve(all_zeros(3));
    oracle.weighted_min(VecXd::Ones(3));
    CHECK(oracle.solves() == 3);
}
