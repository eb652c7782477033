#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetnet/model.hpp"

namespace hetnet::detail
{

std::vector<std::vector<CVecXd>> channels_from_json(const nlohmann::json& h, int L, int K, const std::vector<int>& N);

/// Parses the instance fields of j; keys outside the schema must be listed in extra_keys.
NetworkInstance instance_from_object(const nlohmann::json& j, const std::set<std::string>& extra_keys);

} // namespace hetnet::detail
