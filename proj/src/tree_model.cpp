#include "dualstop/tree_model.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "dualstop/common.hpp"

namespace dualstop {

namespace {

constexpr double kProbSumTol = 1e-12;

std::string node_id_from_json(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_null()) return {};
  throw ConfigError("tree: node ids must be strings or integers");
}

}  // namespace

TreeModel::TreeModel(std::size_t horizon, const std::vector<std::vector<NodeSpec>>& dates)
    : horizon_(horizon) {
  if (dates.size() != horizon + 1) {
    throw ConfigError("tree: expected " + std::to_string(horizon + 1) + " dates, got " +
                      std::to_string(dates.size()));
  }
  if (dates[0].size() != 1) throw ConfigError("tree: date 0 must hold exactly one root node");

  date_offsets_.push_back(0);
  std::map<std::string, std::size_t> previous;
  for (std::size_t d = 0; d <= horizon; ++d) {
    if (dates[d].empty()) throw ConfigError("tree: date " + std::to_string(d) + " has no nodes");
    std::map<std::string, std::size_t> current;
    for (const auto& spec : dates[d]) {
      if (!std::isfinite(spec.reward)) throw ConfigError("tree: non-finite reward at node " + spec.id);
      TreeNode node;
      node.id = spec.id;
      node.date = d;
      node.reward = spec.reward;
      if (d == 0) {
        node.parent = 0;
        node.prob = 1.0;
      } else {
        auto it = previous.find(spec.parent);
        if (it == previous.end()) {
          throw ConfigError("tree: node " + spec.id + " at date " + std::to_string(d) +
                            " names unknown parent '" + spec.parent + "'");
        }
        if (!(spec.prob > 0.0 && spec.prob <= 1.0)) {
          throw ConfigError("tree: transition probability of node " + spec.id + " must lie in (0, 1]");
        }
        node.parent = it->second;
        node.prob = spec.prob;
      }
      if (!current.emplace(spec.id, nodes_.size()).second) {
        throw ConfigError("tree: duplicate node id '" + spec.id + "' at date " + std::to_string(d));
      }
      nodes_.push_back(std::move(node));
    }
    date_offsets_.push_back(nodes_.size());
    previous = std::move(current);
  }

  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    nodes_[nodes_[i].parent].children.push_back(i);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& node = nodes_[i];
    node.reach_prob = (i == 0) ? 1.0 : nodes_[node.parent].reach_prob * node.prob;
    if (node.date < horizon_) {
      if (node.children.empty()) {
        throw ConfigError("tree: node " + node.id + " at date " + std::to_string(node.date) +
                          " has no children before the horizon");
      }
      double total = 0.0;
      for (auto c : node.children) total += nodes_[c].prob;
      if (std::abs(total - 1.0) > kProbSumTol) {
        throw ConfigError("tree: transition probabilities out of node " + node.id + " sum to " +
                          format_double(total));
      }
    }
  }
  if (path_count() > kMaxTreePaths) {
    throw ConfigError("tree: " + std::to_string(path_count()) + " paths exceed the enumeration bound of " +
                      std::to_string(kMaxTreePaths));
  }
}

std::size_t TreeModel::ancestor(std::size_t node, std::size_t date) const {
  while (nodes_[node].date > date) node = nodes_[node].parent;
  return node;
}

TreeModel TreeModel::from_json(const nlohmann::json& j) {
  if (!j.contains("horizon") || !j.contains("dates")) {
    throw ConfigError("tree: JSON needs \"horizon\" and \"dates\"");
  }
  const auto horizon = j.at("horizon").get<std::size_t>();
  std::vector<std::vector<NodeSpec>> dates;
  for (const auto& date : j.at("dates")) {
    auto& specs = dates.emplace_back();
    for (const auto& n : date) {
      NodeSpec s;
      s.id = node_id_from_json(n.at("id"));
      s.reward = n.at("reward").get<double>();
      s.parent = n.contains("parent") ? node_id_from_json(n.at("parent")) : std::string{};
      s.prob = n.value("prob", 1.0);
      specs.push_back(std::move(s));
    }
  }
  return TreeModel(horizon, dates);
}

TreeModel TreeModel::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("tree: cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("tree: " + file.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json TreeModel::to_json() const {
  nlohmann::json dates = nlohmann::json::array();
  for (std::size_t d = 0; d <= horizon_; ++d) {
    nlohmann::json list = nlohmann::json::array();
    auto [lo, hi] = date_range(d);
    for (auto i = lo; i < hi; ++i) {
      const auto& n = nodes_[i];
      nlohmann::json e{{"id", n.id}, {"reward", n.reward}, {"prob", n.prob}};
      e["parent"] = d == 0 ? nlohmann::json(nullptr) : nlohmann::json(nodes_[n.parent].id);
      list.push_back(std::move(e));
    }
    dates.push_back(std::move(list));
  }
  return {{"horizon", horizon_}, {"dates", std::move(dates)}};
}

std::vector<EnumeratedPath> enumerate_paths(const TreeModel& tree) {
  std::vector<EnumeratedPath> paths;
  paths.reserve(tree.path_count());
  const auto J = tree.horizon();
  auto [lo, hi] = tree.date_range(J);
  for (auto leaf = lo; leaf < hi; ++leaf) {
    EnumeratedPath p;
    p.nodes.resize(J + 1);
    p.rewards.resize(J + 1);
    auto n = leaf;
    for (std::size_t d = J + 1; d-- > 0;) {
      p.nodes[d] = n;
      p.rewards[d] = tree.node(n).reward;
      n = tree.node(n).parent;
    }
    p.probability = tree.node(leaf).reach_prob;
    paths.push_back(std::move(p));
  }
  return paths;
}

TreeModel stylized_tree(std::span<const std::pair<double, double>> atoms) {
  std::vector<std::vector<NodeSpec>> dates(3);
  dates[0].push_back({"root", 0.0, "", 1.0});
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const auto id = "u" + std::to_string(k);
    dates[1].push_back({id, atoms[k].first, "root", atoms[k].second});
    dates[2].push_back({id + "_T", 1.0, id, 1.0});
  }
  return TreeModel(2, dates);
}

TreeModel stylized_two_point_tree() {
  const std::pair<double, double> atoms[] = {{0.5, 0.5}, {1.5, 0.5}};
  return stylized_tree(atoms);
}

TreeModel stylized_three_point_tree() {
  const std::pair<double, double> atoms[] = {{0.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}};
  return stylized_tree(atoms);
}

}  // namespace dualstop
