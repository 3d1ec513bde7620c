#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualstop/common.hpp"
#include "dualstop/dual_engine.hpp"
#include "dualstop/martingale_families.hpp"
#include "dualstop/market_models.hpp"
#include "dualstop/randomizers.hpp"
#include "dualstop/snell.hpp"

namespace dualstop {

/// minimize sum_n w_n u_n  subject to  u_n >= c_{j,n} - sum_k alpha_k b_{j,n,k}  for all n, j,
/// with alpha free. One row per (path, date).
struct LPProblem {
  std::size_t n_paths = 0;
  std::size_t n_dates = 0;  // J + 1
  std::size_t n_alpha = 0;
  Table c;                     // n_paths x n_dates
  std::vector<double> b;       // [n][j][k]
  std::vector<double> weights; // empty: 1 / N each

  std::size_t n_rows() const { return n_paths * n_dates; }
  std::size_t n_variables() const { return n_alpha + n_paths; }
  std::span<const double> coef(std::size_t n, std::size_t j) const {
    return {b.data() + (n * n_dates + j) * n_alpha, n_alpha};
  }
  double weight(std::size_t n) const {
    return weights.empty() ? 1.0 / static_cast<double>(n_paths) : weights[n];
  }
  friend bool operator==(const LPProblem&, const LPProblem&) = default;
};

/// c = Z + eta with eta drawn once from the seed; b = basis values.
LPProblem build_lp(const PathBundle& paths, const BasisMatrix& basis, const RandomizerSpec& spec,
                   const SnellData* snell, std::uint64_t seed);
LPProblem build_lp(const PathBundle& paths, const BasisMatrix& basis, const Table& eta);

/// Plain-text form: header lines, then one "u_n >= c - (b_0*a_0 + ...)" line per row.
void dump_lp(std::ostream& out, const LPProblem& lp);
LPProblem load_lp(std::istream& in);

enum class LPStatus { optimal, unbounded, iteration_limit };
std::string to_string(LPStatus status);

struct LPOptions {
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-8;
  std::size_t max_iterations = 0;  // 0: scaled to the problem size
};

struct LPSolution {
  std::vector<double> alpha_hat;
  double objective_value = 0.0;
  std::vector<double> u;
  LPStatus status = LPStatus::iteration_limit;
  std::size_t iterations = 0;
  bool bland = false;  // anti-cycling rule was switched on
};

LPSolution solve_lp(const LPProblem& lp, const LPOptions& options = {});

struct MinimizeResult {
  LPSolution lp;
  DualEstimate in_sample;      // same eta as the LP
  DualEstimate in_sample_raw;  // same paths, no eta
  std::optional<DualEstimate> test;
};

/// Solves the sample problem, re-evaluates alpha_hat on the same eta and without it, and on the
/// test bundle (if given) with the unrandomized martingale.
MinimizeResult minimize(const PathBundle& paths, const BasisMatrix& basis, const RandomizerSpec& spec,
                        const SnellData* snell, std::uint64_t seed, const PathBundle* test_paths = nullptr,
                        const BasisMatrix* test_basis = nullptr, const LPOptions& options = {});

}  // namespace dualstop
