#include "dualstop/market_models.hpp"

#include <algorithm>
#include <cmath>

#include "dualstop/rng.hpp"

namespace dualstop {

namespace {

void require_paths(std::size_t n_paths) {
  if (n_paths == 0) throw ConfigError("simulate: n_paths must be at least 1");
}

}  // namespace

double BermudanCallModel::sigma() const { return std::sqrt(sigma2); }

void BermudanCallModel::validate() const {
  if (!(s0 > 0.0) || !std::isfinite(s0)) throw ConfigError("bermudan: s0 must be positive");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ConfigError("bermudan: sigma2 must be nonnegative");
  if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0)) throw ConfigError("bermudan: strikes must be nonnegative");
}

double BermudanCallModel::stock(std::size_t date, double w) const {
  return s0 * std::exp(-0.5 * sigma2 * static_cast<double>(date) + sigma() * w);
}

PathBundle simulate(const StylizedModel&, std::size_t n_paths, std::uint64_t seed) {
  require_paths(n_paths);
  PathBundle b;
  b.kind = ModelKind::stylized;
  b.horizon = 2;
  b.seed = seed;
  b.drivers = Table(n_paths, 1);
  b.rewards = Table(n_paths, 3);
  const KeyedStream stream(seed, "drivers");
  for (std::size_t n = 0; n < n_paths; ++n) {
    const double u = 2.0 * stream.uniform(n, 0);
    b.drivers(n, 0) = u;
    b.rewards(n, 0) = 0.0;
    b.rewards(n, 1) = u;
    b.rewards(n, 2) = 1.0;
  }
  return b;
}

PathBundle simulate(const BermudanCallModel& model, std::size_t n_paths, std::uint64_t seed) {
  require_paths(n_paths);
  model.validate();
  PathBundle b;
  b.kind = ModelKind::bermudan;
  b.horizon = 2;
  b.seed = seed;
  b.bermudan = model;
  b.drivers = Table(n_paths, 2);
  b.rewards = Table(n_paths, 3);
  const KeyedStream stream(seed, "drivers");
  for (std::size_t n = 0; n < n_paths; ++n) {
    const double w1 = stream.normal(n, 0);
    const double w12 = stream.normal(n, 1);
    b.drivers(n, 0) = w1;
    b.drivers(n, 1) = w12;
    b.rewards(n, 0) = 0.0;
    b.rewards(n, 1) = std::max(model.stock(1, w1) - model.kappa1, 0.0);
    b.rewards(n, 2) = std::max(model.stock(2, w1 + w12) - model.kappa2, 0.0);
  }
  return b;
}

PathBundle simulate(const MarketModel& model, std::size_t n_paths, std::uint64_t seed) {
  return std::visit([&](const auto& m) { return simulate(m, n_paths, seed); }, model);
}

PathBundle tree_bundle(const TreeModel& tree) {
  const auto paths = enumerate_paths(tree);
  PathBundle b;
  b.kind = ModelKind::tree;
  b.horizon = tree.horizon();
  b.rewards = Table(paths.size(), tree.horizon() + 1);
  b.weights.reserve(paths.size());
  b.nodes.reserve(paths.size());
  for (std::size_t n = 0; n < paths.size(); ++n) {
    std::copy(paths[n].rewards.begin(), paths[n].rewards.end(), b.rewards.row(n).begin());
    b.weights.push_back(paths[n].probability);
    b.nodes.push_back(paths[n].nodes);
  }
  return b;
}

// Bound to the published option values and exercise frequencies: pa1 has
// Y*_0 = 0.164402 (exercise at date 1 in ~43% of paths), pa2 has Y*_0 = 0.496182 (~29%).
BermudanCallModel preset_pa1() { return {2.0, 1.0 / 25.0, 2.0, 2.5}; }

BermudanCallModel preset_pa2() { return {2.0, 1.0 / 3.0, 2.0, 3.0}; }

}  // namespace dualstop
