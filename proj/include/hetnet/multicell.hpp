#pragma once
// Cell-restricted serving. BS l may carry user k's beamformer only when both
// belong to the same cell; interference still flows across cells. The cone
// builders consult NetworkInstance::serves, so a masked instance runs through
// every solver unchanged.
#include <string>
#include <vector>

#include "hetnet/model.hpp"

namespace hetnet
{

struct MulticellTopology
{
    int M = 0; // distinct cells
    std::vector<int> cell_of_bs;
    std::vector<int> cell_of_user;

    bool allowed(int l, int k) const { return cell_of_bs[l] == cell_of_user[k]; }
    std::vector<int> bs_in_cell(int m) const;
    std::vector<int> users_in_cell(int m) const;
};

MulticellTopology topology(const NetworkInstance& inst);

/// Throws std::invalid_argument naming the first user whose cell has no BS.
void validate_topology(const NetworkInstance& inst);

using ServingMask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// L x K serving mask after validating the topology.
ServingMask apply_serving_mask(const NetworkInstance& inst);

/// Largest |w| entry inside a forbidden (BS, user) block.
double masked_block_norm(const NetworkInstance& inst, const BeamformingSolution& sol);

/// Copy of inst with new cell maps.
NetworkInstance with_cells(const NetworkInstance& inst, std::vector<int> cell_of_bs, std::vector<int> cell_of_user);

/// Every BS and every user in cell 0.
NetworkInstance single_cell(const NetworkInstance& inst);

} // namespace hetnet
