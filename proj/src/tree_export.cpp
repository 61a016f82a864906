#include "vtwins/tree_export.hpp"

#include <json.hpp>

#include <sstream>

namespace vtwins {

using nlohmann::json;

namespace {

std::string var_name(const std::vector<std::string>& names, int var) {
  if (var >= 0 && static_cast<std::size_t>(var) < names.size()) return names[static_cast<std::size_t>(var)];
  return "x" + std::to_string(var + 1);
}

json node_json(const TreeModel& tree, int id, const std::vector<std::string>& names) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  json j;
  j["id"] = id;
  if (n.is_leaf()) {
    j["leaf_mean"] = n.mean;
    j["count"] = n.count;
    return j;
  }
  j["var"] = n.var;
  j["var_name"] = var_name(names, n.var);
  j["threshold"] = n.threshold;
  j["count"] = n.count;
  j["mean"] = n.mean;
  j["score"] = n.score;
  j["children"] = json::array({node_json(tree, n.left, names), node_json(tree, n.right, names)});
  return j;
}

int read_node(const json& j, int depth, TreeModel& tree, std::vector<std::string>* names) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode node;
  node.depth = depth;
  node.count = j.at("count").get<int>();
  if (j.contains("leaf_mean")) {
    node.mean = j.at("leaf_mean").get<double>();
    tree.nodes[static_cast<std::size_t>(id)] = node;
    return id;
  }
  node.var = j.at("var").get<int>();
  node.threshold = j.at("threshold").get<double>();
  node.mean = j.at("mean").get<double>();
  node.score = j.value("score", 0.0);
  require(node.var >= 0 && node.var < tree.n_features, "tree json: variable index out of range");
  if (names && j.contains("var_name")) {
    if (names->size() < static_cast<std::size_t>(tree.n_features)) names->resize(static_cast<std::size_t>(tree.n_features));
    (*names)[static_cast<std::size_t>(node.var)] = j.at("var_name").get<std::string>();
  }
  const json& children = j.at("children");
  require(children.is_array() && children.size() == 2, "tree json: internal node needs two children");
  node.left = read_node(children[0], depth + 1, tree, names);
  node.right = read_node(children[1], depth + 1, tree, names);
  tree.nodes[static_cast<std::size_t>(id)] = node;
  return id;
}

}  // namespace

std::string tree_to_json(const TreeModel& tree, const std::vector<std::string>& names) {
  require(!tree.nodes.empty(), "tree export: empty tree");
  json doc;
  doc["n_features"] = tree.n_features;
  doc["penalty_used"] = tree.penalty_used;
  doc["root"] = node_json(tree, 0, names);
  return doc.dump(2);
}

TreeModel tree_from_json(const std::string& text, std::vector<std::string>* names) {
  TreeModel tree;
  if (names) names->clear();
  try {
    const json doc = json::parse(text);
    tree.n_features = doc.at("n_features").get<int>();
    tree.penalty_used = doc.value("penalty_used", 0.0);
    read_node(doc.at("root"), 0, tree, names);
  } catch (const json::exception& e) {
    throw Error(std::string("tree json: ") + e.what());
  }
  return tree;
}

std::string tree_to_dot(const TreeModel& tree, const std::vector<std::string>& names) {
  require(!tree.nodes.empty(), "tree export: empty tree");
  std::ostringstream out;
  out.precision(6);
  out << "digraph tree {\n  node [shape=box];\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    out << "  n" << i << " [label=\"";
    if (n.is_leaf())
      out << "effect = " << n.mean << "\\nn = " << n.count;
    else
      out << var_name(names, n.var) << "\\nn = " << n.count;
    out << "\"];\n";
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    out << "  n" << i << " -> n" << n.left << " [label=\"≤ " << n.threshold << "\"];\n";
    out << "  n" << i << " -> n" << n.right << " [label=\"> " << n.threshold << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace vtwins
