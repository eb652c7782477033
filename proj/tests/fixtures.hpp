#pragma once

#include <cmath>
#include <cstdint>

#include "hetnet/model.hpp"

namespace fixtures
{

// The 20-instance suite: seed 0 is the 7-BS, 6-user layout, the others sweep
// L over 3..7 and K over 2..6.
inline int suite_L(int seed) { return seed == 0 ? 7 : 3 + seed % 5; }
inline int suite_K(int seed) { return seed == 0 ? 6 : 2 + (seed / 5) % 5; }

inline hetnet::NetworkInstance suite_instance(int seed, double sinr_db = 5.0)
{
    hetnet::HexnetParams p;
    p.num_bs = suite_L(seed);
    p.sinr_db = sinr_db;
    return hetnet::generate_hexnet(static_cast<std::uint64_t>(seed), suite_K(seed), p);
}

inline hetnet::NetworkInstance small_instance(std::uint64_t seed, int L, int K, double sinr_db = 5.0, int cells = 1)
{
    hetnet::HexnetParams p;
    p.num_bs = L;
    p.cells = cells;
    p.sinr_db = sinr_db;
    return hetnet::generate_hexnet(seed, K, p);
}

// One BS, N antennas, K users with unit noise and given channels.
inline hetnet::NetworkInstance bare_instance(const std::vector<hetnet::CVecXd>& h, double gamma, double P = 1e6,
                                             double pi = 1.0)
{
    hetnet::NetworkInstance inst;
    inst.L = 1;
    inst.K = static_cast<int>(h.size());
    inst.N = {static_cast<int>(h.front().size())};
    inst.gamma = hetnet::VecXd::Constant(inst.K, gamma);
    inst.sigma2 = hetnet::VecXd::Ones(inst.K);
    inst.P = hetnet::VecXd::Constant(1, P);
    inst.pi = hetnet::VecXd::Constant(1, pi);
    inst.cell_of_bs = {0};
    inst.cell_of_user.assign(inst.K, 0);
    inst.h = {h};
    inst.validate();
    return inst;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace fixtures
