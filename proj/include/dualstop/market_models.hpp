#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dualstop/common.hpp"
#include "dualstop/tree_model.hpp"

namespace dualstop {

/// J = 2, Z_0 = 0, Z_1 = U ~ Uniform[0, 2], Z_2 = 1. Driver column: U.
struct StylizedModel {};

/// Two-exercise Bermudan call under Black-Scholes:
/// S_j = s0 exp(-sigma2 j / 2 + sigma W_j), Z_1 = (S_1 - kappa1)^+, Z_2 = (S_2 - kappa2)^+.
/// Driver columns: W_1 and W_{1,2} = W_2 - W_1.
struct BermudanCallModel {
  double s0 = 2.0;
  double sigma2 = 1.0 / 25.0;
  double kappa1 = 2.0;
  double kappa2 = 2.5;

  double sigma() const;
  void validate() const;
  double stock(std::size_t date, double w) const;
};

using MarketModel = std::variant<StylizedModel, BermudanCallModel>;

enum class ModelKind { stylized, bermudan, tree };

/// Simulated (or enumerated) paths with rewards Z_0..Z_J per path.
struct PathBundle {
  ModelKind kind = ModelKind::stylized;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  Table drivers;  // stylized: U | bermudan: W1, W12 | tree: none
  Table rewards;  // n x (J+1)
  std::vector<double> weights;               // tree paths: probabilities; MC: empty (equal weights)
  std::vector<std::vector<std::size_t>> nodes;  // tree paths: node index per date
  std::optional<BermudanCallModel> bermudan;

  std::size_t n_paths() const { return rewards.rows(); }
  bool weighted() const { return !weights.empty(); }
  double weight(std::size_t n) const {
    return weights.empty() ? 1.0 / static_cast<double>(n_paths()) : weights[n];
  }
  std::span<const double> z(std::size_t n) const { return rewards.row(n); }
};

PathBundle simulate(const StylizedModel& model, std::size_t n_paths, std::uint64_t seed);
PathBundle simulate(const BermudanCallModel& model, std::size_t n_paths, std::uint64_t seed);
PathBundle simulate(const MarketModel& model, std::size_t n_paths, std::uint64_t seed);

/// Enumerated tree paths as a weighted bundle.
PathBundle tree_bundle(const TreeModel& tree);

/// Named parameter sets of the two-exercise call.
BermudanCallModel preset_pa1();
BermudanCallModel preset_pa2();

}  // namespace dualstop
