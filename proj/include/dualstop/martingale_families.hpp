#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualstop/common.hpp"
#include "dualstop/expression.hpp"
#include "dualstop/market_models.hpp"
#include "dualstop/snell.hpp"

namespace dualstop {

enum class FamilyKind { doob_scalar, msty, hermite, custom };

/// Basis values B_{j,k} per path and date; M_j(alpha) = sum_k alpha_k B_{j,k}.
class BasisMatrix {
 public:
  BasisMatrix() = default;
  BasisMatrix(FamilyKind kind, std::size_t n_paths, std::size_t horizon, std::size_t dim)
      : kind_(kind), n_paths_(n_paths), horizon_(horizon), dim_(dim),
        values_(n_paths * (horizon + 1) * dim, 0.0) {}

  FamilyKind kind() const { return kind_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t dim() const { return dim_; }

  double& operator()(std::size_t n, std::size_t j, std::size_t k) {
    return values_[(n * (horizon_ + 1) + j) * dim_ + k];
  }
  double operator()(std::size_t n, std::size_t j, std::size_t k) const {
    return values_[(n * (horizon_ + 1) + j) * dim_ + k];
  }
  /// The dim() values B_{j,.} of path n at date j.
  std::span<const double> at(std::size_t n, std::size_t j) const {
    return {values_.data() + (n * (horizon_ + 1) + j) * dim_, dim_};
  }

  /// alpha . B_{j} on path n.
  double combine(std::size_t n, std::size_t j, std::span<const double> alpha) const;

 private:
  FamilyKind kind_ = FamilyKind::custom;
  std::size_t n_paths_ = 0;
  std::size_t horizon_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Probabilists' Hermite polynomial He_k.
double hermite(int k, double x);

struct HermiteSpec {
  int k = 3;  // degrees in W_1
  int l = 3;  // degrees in W_{1,2}
};

/// Single column M*: the family alpha * M*.
BasisMatrix build_doob_basis(const SnellData& snell);

/// Four columns: W_1-terms fixed after date 1 and date-2 increments; alpha = (1,1,1,1) gives M*.
BasisMatrix build_stylized_basis(const PathBundle& paths, const SnellData& snell);

/// He_k(W_1) for k = 1..K (date 1 on), then He_k(W_1) He_l(W_{1,2}) for k = 0..K, l = 1..L (date 2).
BasisMatrix build_hermite_basis(const PathBundle& paths, const HermiteSpec& spec);

/// Columns given as per-date increment expressions; dates absent from a column add nothing.
struct CustomFamily {
  std::vector<std::map<std::size_t, Expression>> columns;

  static CustomFamily from_json(const nlohmann::json& j);
  static CustomFamily load(const std::filesystem::path& file);
};

/// Variables visible to custom expressions on this bundle: drivers (U or W1, W12),
/// Z<j>, and with Snell data Y<j>, C<j>, M<j>, A<j>.
std::vector<std::string> custom_variables(const PathBundle& paths, bool with_snell);

BasisMatrix build_custom_basis(const PathBundle& paths, const SnellData* snell, CustomFamily family);

/// Martingale values M_0..M_J per path (n x (J+1)).
Table eval_family(const BasisMatrix& basis, std::span<const double> alpha);

struct FamilySpec {
  FamilyKind kind = FamilyKind::doob_scalar;
  HermiteSpec hermite;
  std::filesystem::path custom_file;

  static FamilySpec from_json(const nlohmann::json& j);
  std::string name() const;
};

/// Builds the basis named by `spec`; families that need Snell data require `snell`.
BasisMatrix build_basis(const FamilySpec& spec, const PathBundle& paths, const SnellData* snell);

/// One row per path: B_{j,k} for all j, k.
void write_basis_csv(std::ostream& out, const BasisMatrix& basis);

}  // namespace dualstop
