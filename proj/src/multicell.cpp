#include "hetnet/multicell.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace hetnet
{

std::vector<int> MulticellTopology::bs_in_cell(int m) const
{
    std::vector<int> out;
    for (int l = 0; l < static_cast<int>(cell_of_bs.size()); ++l)
        if (cell_of_bs[l] == m)
            out.push_back(l);
    return out;
}

std::vector<int> MulticellTopology::users_in_cell(int m) const
{
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(cell_of_user.size()); ++k)
        if (cell_of_user[k] == m)
            out.push_back(k);
    return out;
}

MulticellTopology topology(const NetworkInstance& inst)
{
    MulticellTopology t;
    t.cell_of_bs = inst.cell_of_bs;
    t.cell_of_user = inst.cell_of_user;
    t.M = inst.num_cells();
    return t;
}

void validate_topology(const NetworkInstance& inst)
{
    inst.validate();
    const std::set<int> with_bs(inst.cell_of_bs.begin(), inst.cell_of_bs.end());
    for (int k = 0; k < inst.K; ++k)
        if (!with_bs.count(inst.cell_of_user[k]))
            throw std::invalid_argument("user " + std::to_string(k) + " is in cell " +
                                        std::to_string(inst.cell_of_user[k]) + ", which has no BS");
}

ServingMask apply_serving_mask(const NetworkInstance& inst)
{
    validate_topology(inst);
    ServingMask mask(inst.L, inst.K);
    for (int l = 0; l < inst.L; ++l)
        for (int k = 0; k < inst.K; ++k)
            mask(l, k) = inst.serves(l, k);
    return mask;
}

double masked_block_norm(const NetworkInstance& inst, const BeamformingSolution& sol)
{
    double worst = 0;
    for (int l = 0; l < inst.L; ++l)
        for (int k = 0; k < inst.K; ++k)
            if (!inst.serves(l, k))
                worst = std::max(worst, sol.w.col(k).segment(inst.antenna_offset(l), inst.N[l]).cwiseAbs().maxCoeff());
    return worst;
}

NetworkInstance with_cells(const NetworkInstance& inst, std::vector<int> cell_of_bs, std::vector<int> cell_of_user)
{
    NetworkInstance out = inst;
    out.cell_of_bs = std::move(cell_of_bs);
    out.cell_of_user = std::move(cell_of_user);
    validate_topology(out);
    return out;
}

NetworkInstance single_cell(const NetworkInstance& inst)
{
    return with_cells(inst, std::vector<int>(inst.L, 0), std::vector<int>(inst.K, 0));
}

} // namespace hetnet
