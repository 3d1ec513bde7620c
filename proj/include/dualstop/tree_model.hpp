#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace dualstop {

/// Upper bound on root-to-leaf paths accepted for exact enumeration.
inline constexpr std::uint64_t kMaxTreePaths = 10'000'000;

/// One node as specified by a user: `parent` names a node id at the previous date.
struct NodeSpec {
  std::string id;
  double reward = 0.0;
  std::string parent;  // empty at date 0
  double prob = 1.0;   // transition probability from parent
};

struct TreeNode {
  std::string id;
  std::size_t date = 0;
  double reward = 0.0;
  std::size_t parent = 0;  // global index; root points to itself
  double prob = 1.0;
  double reach_prob = 1.0;  // unconditional probability of reaching this node
  std::vector<std::size_t> children;
};

/// Exactly enumerable finite probability tree with rewards at every node.
///
/// Nodes are stored date by date under a global index; processes on the tree
/// (martingales, perturbations) are plain vectors indexed the same way.
class TreeModel {
 public:
  TreeModel(std::size_t horizon, const std::vector<std::vector<NodeSpec>>& dates);

  static TreeModel from_json(const nlohmann::json& j);
  static TreeModel load(const std::filesystem::path& file);
  nlohmann::json to_json() const;

  std::size_t horizon() const { return horizon_; }
  std::size_t node_count() const { return nodes_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t root() const { return 0; }

  /// Global indices of the nodes at `date`, contiguous.
  std::pair<std::size_t, std::size_t> date_range(std::size_t date) const {
    return {date_offsets_[date], date_offsets_[date + 1]};
  }

  std::uint64_t path_count() const { return date_offsets_[horizon_ + 1] - date_offsets_[horizon_]; }

  /// Node at `date` on the unique path from the root to `node`.
  std::size_t ancestor(std::size_t node, std::size_t date) const;

 private:
  std::size_t horizon_;
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> date_offsets_;
};

struct EnumeratedPath {
  std::vector<std::size_t> nodes;  // one per date 0..J
  double probability = 0.0;
  std::vector<double> rewards;
};

/// Every root-to-leaf path exactly once, in leaf order.
std::vector<EnumeratedPath> enumerate_paths(const TreeModel& tree);

/// Two-date tree with Z_0 = 0, Z_2 = 1 and Z_1 on the given (value, prob) atoms.
TreeModel stylized_tree(std::span<const std::pair<double, double>> atoms);

/// Z_1 in {0.5, 1.5} with probability 1/2 each.
TreeModel stylized_two_point_tree();

/// Z_1 in {0, 1, 2} with probabilities {1/4, 1/2, 1/4}; same Y*_0 = 5/4 and
/// the same extreme Z_1 values as the continuous stylized model.
TreeModel stylized_three_point_tree();

}  // namespace dualstop
