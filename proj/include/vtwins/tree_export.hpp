#pragma once

#include "vtwins/tree.hpp"

#include <string>
#include <vector>

namespace vtwins {

/// Nested JSON document. Internal nodes carry id, var, var_name, threshold,
/// count, mean and children; leaves carry id, leaf_mean and count.
std::string tree_to_json(const TreeModel& tree, const std::vector<std::string>& names = {});
/// Parses tree_to_json output. Variable names found in the document are
/// stored in `names` (indexed by variable) when it is given.
TreeModel tree_from_json(const std::string& text, std::vector<std::string>* names = nullptr);

/// Graphviz digraph with edges labelled "<= t" and "> t".
std::string tree_to_dot(const TreeModel& tree, const std::vector<std::string>& names = {});

}  // namespace vtwins
