#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualstop/market_models.hpp"
#include "dualstop/randomizers.hpp"
#include "dualstop/rng.hpp"
#include "dualstop/snell.hpp"
#include "dualstop/tree_model.hpp"

namespace dualstop {

/// A process on a tree: one value per node, indexed like TreeModel nodes.
using NodeValues = std::vector<double>;

/// Optimality predicates for martingales M = M* - S on one tree, together with
/// their brute-force counterparts by exact enumeration.
class TreeLab {
 public:
  explicit TreeLab(TreeModel tree);

  const TreeModel& tree() const { return tree_; }
  const TreeSnell& snell() const { return snell_; }
  const PathBundle& paths() const { return paths_; }
  const SnellData& path_snell() const { return path_snell_; }

  /// Z >= cont (ties included) or the last date.
  bool is_tau(std::size_t node) const { return tau_[node]; }
  /// Node of the last exercise date strictly before `node` on its path; -1 if none.
  long previous_tau(std::size_t node) const { return prev_tau_[node]; }

  NodeValues doob() const { return snell_.m; }
  NodeValues shifted(const NodeValues& s) const;  // M* - S

  bool is_martingale(const NodeValues& x, double tol = 1e-10) const;

  /// E_j[max_{j<=r<=J}(Z_r - M_r + M_j)] = Y*_j at every date-j node. Rejects non-martingales.
  bool is_weakly_optimal_at(const NodeValues& m, std::size_t j) const;
  /// max_{j<=r<=J}(Z_r - M_r + M_j) = Y*_j on every path. Rejects non-martingales.
  bool is_surely_optimal_at(const NodeValues& m, std::size_t j) const;
  bool is_weakly_optimal(const NodeValues& m) const;
  bool is_surely_optimal(const NodeValues& m) const;

  /// S a martingale from 0 with the segment conditions on levels at every node.
  bool check_thm_main(const NodeValues& s) const;
  /// The same conditions in increment form: lower/upper bounds inside segments, cap at exercise dates.
  bool check_cor_eqco(const NodeValues& s) const;
  /// (weakly optimal at 0, surely optimal at 0) through the pathwise conditions around tau*.
  std::pair<bool, bool> check_thm_i0(const NodeValues& s) const;
  /// Sufficient increment conditions for (weak, sure) optimality at 0.
  std::pair<bool, bool> check_sufficient_i0(const NodeValues& s) const;
  /// S a martingale moving only at exercise dates, capped there by Z - cont.
  bool check_cor_alms(const NodeValues& s) const;
  /// On every path max_r (Z_r - M_r) = Z_tau* - M_tau*.
  bool pathwise_max_at_tau(const NodeValues& m) const;

  struct Randomized {
    double gap = 0.0;       // E[max_j(Z_j - M_j + eta_j)] - Y*_0
    double variance = 0.0;  // of the randomized pathwise max
  };
  /// Optimal randomizer (theta = 1) applied to M* - S; M* - S must be weakly optimal at 0.
  Randomized check_thm_opran(const NodeValues& s, XiLaw law = XiLaw::uniform, XiMode mode = XiMode::grid) const;

  /// Values of a node process along enumerated path n.
  std::vector<double> along(const NodeValues& x, std::size_t n) const;

 private:
  void require_martingale(const NodeValues& m) const;
  /// Calls f(node, child) for every edge.
  template <class F>
  bool all_edges(F&& f) const;

  TreeModel tree_;
  TreeSnell snell_;
  PathBundle paths_;
  SnellData path_snell_;
  std::vector<char> tau_;
  std::vector<long> prev_tau_;
};

struct RandomTreeOptions {
  std::size_t horizon = 3;
  std::size_t branching = 2;
  bool recombining = false;  // rewards depend on (date, number of up moves) only
};

TreeModel random_tree(SequentialRng& rng, const RandomTreeOptions& options);

/// feasible: increments drawn inside the segment bounds (optimal at all dates).
/// sure: moves only at exercise dates, within the cap.
/// weak0 / sure0: drawn from the sufficient conditions at date 0.
/// free: unconstrained mean-zero increments.
/// violate: feasible except one node pushed outside its bounds.
enum class PerturbationMode { feasible, sure, weak0, sure0, free, violate };
std::string to_string(PerturbationMode mode);

/// Random martingale perturbation S (exactly mean-zero increments) of the given kind.
NodeValues random_perturbation(const TreeLab& lab, SequentialRng& rng, PerturbationMode mode, double scale);

struct SweepOptions {
  std::uint64_t seed = 1;
  std::size_t perturbations_per_tree = 120;
  bool include_stylized = true;
};

struct SweepReport {
  nlohmann::json json;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::size_t findings = 0;
  bool passed() const { return failures == 0; }
};

/// Checks every predicate against brute force over random trees and perturbations,
/// plus fixed negative controls. A zero randomized gap with S != 0 is a failure under
/// the texp law and a finding under the uniform law.
SweepReport run_sweep(const SweepOptions& options);

/// Sweep over a single user tree.
SweepReport run_tree_sweep(const TreeModel& tree, const SweepOptions& options);

}  // namespace dualstop
