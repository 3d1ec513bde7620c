#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dualstop/common.hpp"
#include "dualstop/martingale_families.hpp"
#include "dualstop/market_models.hpp"
#include "dualstop/randomizers.hpp"
#include "dualstop/snell.hpp"

namespace dualstop {

struct DualEstimate {
  double mean = 0.0;
  double std = 0.0;  // unbiased (n - 1) divisor
  double se = 0.0;
  std::vector<double> per_path_max;
  std::size_t n = 0;
};

/// max_j (Z_j - M_j + eta_j).
double pathwise_max(std::span<const double> z, std::span<const double> m, std::span<const double> eta);

/// Mean, standard deviation and standard error of equally weighted samples.
DualEstimate summarize(std::vector<double> samples);

/// Pathwise maxima for given martingale values and perturbations (eta may be empty).
/// On weighted (tree) bundles mean and std are probability-weighted and se is 0.
DualEstimate estimate_values(const PathBundle& paths, const Table& m, const Table& eta);

/// Sample dual objective for one family member; eta drawn from the seed's xi stream.
DualEstimate estimate(const PathBundle& paths, const BasisMatrix& basis, std::span<const double> alpha,
                      const RandomizerSpec& spec, const SnellData* snell, std::uint64_t seed);

struct ExactMoments {
  double mean = 0.0;
  double variance = 0.0;  // of the (randomized) pathwise max under the path law and xi
};

/// Exact E[max_j (Z_j - M_j + eta_j)] on weighted tree paths, with xi integrated
/// on the quadrature grid (default) or against its exact law.
ExactMoments exact_objective(const PathBundle& tree_paths, const Table& m, const RandomizerSpec& spec,
                             const SnellData* snell, XiMode mode = XiMode::grid);
ExactMoments exact_objective(const PathBundle& tree_paths, const BasisMatrix& basis, std::span<const double> alpha,
                             const RandomizerSpec& spec, const SnellData* snell, XiMode mode = XiMode::grid);

struct ProfileRow {
  std::vector<double> alpha;
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

std::vector<ProfileRow> variance_profile(const PathBundle& paths, const BasisMatrix& basis,
                                         const std::vector<std::vector<double>>& alpha_grid,
                                         const RandomizerSpec& spec, const SnellData* snell, std::uint64_t seed);

/// CSV: alpha_1..alpha_K, mean, std, se, n, rel_dev (= std / y0).
void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows, double y0);

/// Several curves in one file, with a leading curve column.
struct ProfileCurve {
  std::string name;
  std::vector<ProfileRow> rows;
};
void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves, double y0);

}  // namespace dualstop
