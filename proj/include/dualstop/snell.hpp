#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "dualstop/common.hpp"
#include "dualstop/market_models.hpp"
#include "dualstop/tree_model.hpp"

namespace dualstop {

/// Ties Z_j == C_j within this tolerance count as exercise.
inline constexpr double kExerciseTol = 1e-12;

/// Per-path Snell envelope, Doob martingale, compensator and continuation values.
/// cont(n, J) is 0 by the convention Y*_{J+1} = 0.
struct SnellData {
  std::size_t horizon = 0;
  double y0 = 0.0;
  Table y;
  Table m;
  Table a;
  Table cont;
  std::vector<int> tau_star;  // first optimal exercise date per path

  std::size_t n_paths() const { return y.rows(); }
  /// Y*_j - Z_j + A*_j, the scale of the optimal randomizer.
  double slack(std::span<const double> z, std::size_t n, std::size_t j) const {
    return y(n, j) - z[j] + a(n, j);
  }
};

/// Node-indexed Snell data on a tree.
struct TreeSnell {
  std::vector<double> y;
  std::vector<double> cont;
  std::vector<double> m;
  std::vector<double> a;
  double y0() const { return y.front(); }
};

/// Exact backward induction on a tree.
TreeSnell backward_induct(const TreeModel& tree);

/// Maps node-indexed Snell data onto the enumerated paths of `bundle`.
SnellData snell_on_paths(const TreeModel& tree, const TreeSnell& snell, const PathBundle& bundle);

/// Closed-form Snell data of the stylized model (Y*_0 = 5/4).
SnellData stylized_snell(const PathBundle& paths);

/// C_1(w1) = E[(S_2 - kappa2)^+ | W_1 = w1] in closed form.
double black_continuation(const BermudanCallModel& model, double w1);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Y*_0 = E[max(Z_1(W_1), C_1(W_1))] by adaptive Gauss-Kronrod on [-10, 10].
QuadratureResult bermudan_value(const BermudanCallModel& model, double abs_tol = 1e-7);

/// Per-path Snell data for Bermudan-call paths given Y*_0.
SnellData bermudan_snell(const BermudanCallModel& model, const PathBundle& paths, double y0);

/// Y*_0 by quadrature followed by per-path Snell data.
std::pair<double, SnellData> bs_value_and_snell(const BermudanCallModel& model, const PathBundle& paths);

/// Successive optimal exercise dates tau^1 < ... < tau^{l_J} = J on one path
/// and the segment label l_i of every date (tau^0 = 0^- is the sentinel -1).
class SegmentIndex {
 public:
  SegmentIndex(std::span<const double> z, std::span<const double> cont);

  const std::vector<int>& tau_dates() const { return tau_; }
  /// l_i (1-based) with tau^{l_i - 1} < i <= tau^{l_i}.
  int label(std::size_t i) const { return label_[i]; }
  /// tau^{l_i - 1}; -1 for the first segment.
  int previous_tau(std::size_t i) const { return label_[i] == 1 ? -1 : tau_[label_[i] - 2]; }
  /// tau^{l_i}, which is tau*_i of the consistent stopping family.
  int tau_at(std::size_t i) const { return tau_[label_[i] - 1]; }
  bool is_tau(std::size_t i) const { return tau_at(i) == static_cast<int>(i); }
  int first_tau() const { return tau_.front(); }

 private:
  std::vector<int> tau_;
  std::vector<int> label_;
};

std::vector<SegmentIndex> stopping_family(const PathBundle& paths, const SnellData& snell);

/// One row per path: drivers, Z_j, Y*_j, M*_j, A*_j, tau*.
void write_snell_csv(std::ostream& out, const PathBundle& paths, const SnellData& snell);

/// Snell data for any bundle: closed forms for the two models, induction for trees.
SnellData snell_for(const PathBundle& paths, const TreeModel* tree = nullptr);

}  // namespace dualstop
