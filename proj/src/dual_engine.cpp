#include "dualstop/dual_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace dualstop {

double pathwise_max(std::span<const double> z, std::span<const double> m, std::span<const double> eta) {
  if (m.size() != z.size() || (!eta.empty() && eta.size() != z.size())) {
    throw ConfigError("pathwise_max: length mismatch");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.size(); ++j) {
    best = std::max(best, z[j] - m[j] + (eta.empty() ? 0.0 : eta[j]));
  }
  return best;
}

DualEstimate summarize(std::vector<double> samples) {
  DualEstimate e;
  e.n = samples.size();
  if (e.n == 0) throw ConfigError("summarize: no samples");
  CompensatedSum sum;
  for (double v : samples) sum.add(v);
  e.mean = sum.value() / static_cast<double>(e.n);
  if (e.n > 1) {
    CompensatedSum sq;
    for (double v : samples) sq.add((v - e.mean) * (v - e.mean));
    e.std = std::sqrt(sq.value() / static_cast<double>(e.n - 1));
    e.se = e.std / std::sqrt(static_cast<double>(e.n));
  }
  e.per_path_max = std::move(samples);
  return e;
}

DualEstimate estimate_values(const PathBundle& paths, const Table& m, const Table& eta) {
  if (m.rows() != paths.n_paths() || (!eta.empty() && eta.rows() != paths.n_paths())) {
    throw ConfigError("estimate: martingale or perturbation rows do not match the paths");
  }
  std::vector<double> maxima(paths.n_paths());
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    maxima[n] = pathwise_max(paths.z(n), m.row(n), eta.empty() ? std::span<const double>{} : eta.row(n));
  }
  if (!paths.weighted()) return summarize(std::move(maxima));
  DualEstimate e;
  e.n = maxima.size();
  CompensatedSum first;
  for (std::size_t n = 0; n < e.n; ++n) first.add(paths.weight(n) * maxima[n]);
  e.mean = first.value();
  CompensatedSum var;
  for (std::size_t n = 0; n < e.n; ++n) var.add(paths.weight(n) * (maxima[n] - e.mean) * (maxima[n] - e.mean));
  e.std = std::sqrt(var.value());
  e.per_path_max = std::move(maxima);
  return e;
}

DualEstimate estimate(const PathBundle& paths, const BasisMatrix& basis, std::span<const double> alpha,
                      const RandomizerSpec& spec, const SnellData* snell, std::uint64_t seed) {
  if (basis.n_paths() != paths.n_paths()) throw ConfigError("estimate: basis does not match the paths");
  const Table m = eval_family(basis, alpha);
  const Table eta = make_eta(spec, paths, snell, seed);
  return estimate_values(paths, m, eta);
}

ExactMoments exact_objective(const PathBundle& tree_paths, const Table& m, const RandomizerSpec& spec,
                             const SnellData* snell, XiMode mode) {
  if (!tree_paths.weighted()) throw ConfigError("exact_objective: needs enumerated tree paths");
  if (m.rows() != tree_paths.n_paths()) throw ConfigError("exact_objective: martingale does not match the paths");
  const Table scales = eta_scales(spec, tree_paths, snell);
  const auto width = tree_paths.horizon + 1;
  std::vector<double> offsets(width);
  CompensatedSum first, second;
  for (std::size_t n = 0; n < tree_paths.n_paths(); ++n) {
    const auto z = tree_paths.z(n);
    for (std::size_t j = 0; j < width; ++j) offsets[j] = z[j] - m(n, j);
    const auto mm = expected_max(offsets, scales.row(n), spec.xi, mode);
    const double w = tree_paths.weight(n);
    first.add(w * mm.mean);
    second.add(w * mm.second);
  }
  ExactMoments out;
  out.mean = first.value();
  out.variance = std::max(0.0, second.value() - out.mean * out.mean);
  return out;
}

ExactMoments exact_objective(const PathBundle& tree_paths, const BasisMatrix& basis, std::span<const double> alpha,
                             const RandomizerSpec& spec, const SnellData* snell, XiMode mode) {
  return exact_objective(tree_paths, eval_family(basis, alpha), spec, snell, mode);
}

std::vector<ProfileRow> variance_profile(const PathBundle& paths, const BasisMatrix& basis,
                                         const std::vector<std::vector<double>>& alpha_grid,
                                         const RandomizerSpec& spec, const SnellData* snell, std::uint64_t seed) {
  if (alpha_grid.empty()) throw ConfigError("variance_profile: empty alpha grid");
  const Table eta = make_eta(spec, paths, snell, seed);
  std::vector<ProfileRow> rows;
  rows.reserve(alpha_grid.size());
  for (const auto& alpha : alpha_grid) {
    const auto e = estimate_values(paths, eval_family(basis, alpha), eta);
    rows.push_back({alpha, e.mean, e.std, e.se, e.n});
  }
  return rows;
}

namespace {

void write_profile_header(std::ostream& out, std::size_t dim) {
  for (std::size_t k = 0; k < dim; ++k) out << "alpha_" << k + 1 << ',';
  out << "mean,std,se,n,rel_dev\n";
}

void write_profile_row(std::ostream& out, const ProfileRow& r, double y0) {
  for (double a : r.alpha) out << format_double(a) << ',';
  out << format_double(r.mean) << ',' << format_double(r.std) << ',' << format_double(r.se) << ',' << r.n << ','
      << format_double(r.std / y0) << '\n';
}

}  // namespace

void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows, double y0) {
  write_profile_header(out, rows.empty() ? 0 : rows.front().alpha.size());
  for (const auto& r : rows) write_profile_row(out, r, y0);
}

void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves, double y0) {
  out << "curve,";
  std::size_t dim = 0;
  for (const auto& c : curves) {
    if (!c.rows.empty()) dim = c.rows.front().alpha.size();
  }
  write_profile_header(out, dim);
  for (const auto& c : curves) {
    for (const auto& r : c.rows) {
      out << c.name << ',';
      write_profile_row(out, r, y0);
    }
  }
}

}  // namespace dualstop
