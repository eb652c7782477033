#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "hetnet/model.hpp"

using namespace hetnet;

TEST_CASE("activation helpers round trip")
{
    for (std::uint64_t mask = 0; mask < 32; ++mask)
    {
        const auto a = activation_from_mask(mask, 5);
        CHECK(activation_mask(a) == mask);
        CHECK(is_binary(a));
        CHECK(bitstring(a).size() == 5);
    }
    CHECK(bitstring(activation_from_mask(0b00101, 5)) == "10100");
    CHECK(bitstring(all_ones(3)) == "111");
    CHECK(bitstring(all_zeros(2)) == "00");
    CHECK_FALSE(is_binary({0, 2, 1}));
}

TEST_CASE("unit conversions and the power model")
{
    CHECK(dbm_to_watts(43.0) == doctest::Approx(19.952623149688797).epsilon(1e-12));
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
    CHECK(watts_to_dbm(dbm_to_watts(-143.0)) == doctest::Approx(-143.0));
    CHECK(dbm_to_watts(-143.0) == doctest::Approx(5.01187e-18).epsilon(1e-5));
    CHECK(db_to_linear(5.0) == doctest::Approx(3.16227766));
    // 0.25 x (6.8 W - 4.3 W)
    CHECK(PowerModel{}.pi() == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("path loss law and distance clamp")
{
    HexnetParams p;
    CHECK(pathloss_db(p, 1.0) == doctest::Approx(148.1));
    CHECK(pathloss_db(p, 0.1) == doctest::Approx(148.1 - 37.6));
    CHECK(pathloss_db(p, 0.5) == doctest::Approx(148.1 + 37.6 * std::log10(0.5)));
    CHECK(pathloss_db(p, 1e-6) == doctest::Approx(pathloss_db(p, p.min_distance_km)));
}

TEST_CASE("hexagonal sites")
{
    const auto sites = hex_sites(1.0);
    REQUIRE(sites.size() == 7);
    CHECK(sites[0].first == doctest::Approx(0.0));
    CHECK(sites[0].second == doctest::Approx(0.0));
    for (int i = 1; i < 7; ++i)
    {
        CHECK(std::hypot(sites[i].first, sites[i].second) == doctest::Approx(std::sqrt(3.0)));
        const auto& next = sites[i % 6 + 1];
        CHECK(std::hypot(sites[i].first - next.first, sites[i].second - next.second) ==
              doctest::Approx(std::sqrt(3.0)));
    }
}

TEST_CASE("generator shape and determinism")
{
    const auto a = generate_hexnet(0, 6);
    const auto b = generate_hexnet(0, 6);
    const auto c = generate_hexnet(1, 6);
    CHECK(a.L == 7);
    CHECK(a.K == 6);
    CHECK(a.total_antennas() == 14);
    CHECK(to_json(a) == to_json(b));
    CHECK(to_json(a) != to_json(c));
    for (int l = 0; l < a.L; ++l)
    {
        CHECK(a.P(l) == doctest::Approx(dbm_to_watts(43.0)));
        CHECK(a.pi(l) == doctest::Approx(0.625));
    }
    for (int k = 0; k < a.K; ++k)
    {
        CHECK(a.gamma(k) == doctest::Approx(db_to_linear(5.0)));
        CHECK(a.sigma2(k) == doctest::Approx(dbm_to_watts(-143.0)));
    }
}

TEST_CASE("channel gains follow the path-loss law on average")
{
    // E[10 log10 |h|^2] = -E[PL(d)] + 9 dBi + 0 (shadowing) + E[10 log10 Exp(1)]
    // E[log10 d] = -0.2578 for d uniform in a unit hexagon; E[10 log10 Exp(1)] = -2.5068
    HexnetParams p;
    p.num_bs = 1;
    double acc = 0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed)
    {
        const auto inst = generate_hexnet(seed, 5, p);
        for (int k = 0; k < inst.K; ++k)
            for (int n = 0; n < inst.N[0]; ++n)
            {
                acc += 10 * std::log10(std::norm(inst.h[0][k](n)));
                ++count;
            }
    }
    const double expected = -(148.1 + 37.6 * -0.2578) + 9.0 - 2.5068;
    CHECK(std::abs(acc / count - expected) < 1.0);
}

TEST_CASE("json round trip is exact and strict")
{
    const auto inst = fixtures::small_instance(3, 4, 3, 7.5, 2);
    const auto text = to_json(inst);
    const auto back = instance_from_json(text);
    CHECK(to_json(back) == text);
    for (int l = 0; l < inst.L; ++l)
        for (int k = 0; k < inst.K; ++k)
            CHECK(back.h[l][k] == inst.h[l][k]);
    CHECK(back.cell_of_bs == inst.cell_of_bs);

    auto extra = text;
    extra.insert(1, "\"bogus\": 1,");
    CHECK_THROWS_AS(instance_from_json(extra), std::invalid_argument);
    CHECK_THROWS_AS(instance_from_json("{\"L\": 1}"), std::invalid_argument);
    CHECK_THROWS_AS(instance_from_json("not json"), std::invalid_argument);
}

TEST_CASE("SINR evaluation against a hand computation")
{
    CVecXd h1(2), h2(2);
    h1 << Complex(1, 0), Complex(0, 1);
    h2 << Complex(0.5, 0.5), Complex(-1, 0);
    auto inst = fixtures::bare_instance({h1, h2}, 1.0);
    BeamformingSolution sol;
    sol.w = CMatXd(2, 2);
    sol.w << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(0, 1);
    sol.activation = {1};
    finalize(inst, sol);
    // h1^H w1 = 1, h1^H w2 = conj(i) i = 1 ; h2^H w1 = 0.5 - 0.5i, h2^H w2 = -i
    CHECK(eval_sinr(inst, sol, 0) == doctest::Approx(1.0 / (1.0 + 1.0)));
    CHECK(eval_sinr(inst, sol, 1) == doctest::Approx(1.0 / (0.5 + 1.0)));
    CHECK(sol.tx_power(0) == doctest::Approx(2.0));
    CHECK(sol.objective == doctest::Approx(3.0));
    CHECK(min_sinr_slack(inst, sol) == doctest::Approx(-0.5));
}

TEST_CASE("rng streams")
{
    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i)
        CHECK(a.next() == b.next());
    Rng r(7);
    double s = 0, s2 = 0, u_min = 1, u_max = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i)
    {
        const double g = r.gaussian();
        s += g;
        s2 += g * g;
        const double u = r.uniform();
        u_min = std::min(u_min, u);
        u_max = std::max(u_max, u);
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(u_min >= 0.0);
    CHECK(u_max < 1.0);
    double c2 = 0;
    for (int i = 0; i < n; ++i)
        c2 += std::norm(r.cgaussian());
    CHECK(c2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("validation catches malformed instances")
{
    auto inst = fixtures::small_instance(1, 3, 2);
    auto bad = inst;
    bad.gamma(0) = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = inst;
    bad.h[0][0] = CVecXd::Zero(5);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = inst;
    bad.cell_of_user.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    HexnetParams p;
    p.num_bs = 8;
    CHECK_THROWS_AS(generate_hexnet(0, 2, p), std::invalid_argument);
}
