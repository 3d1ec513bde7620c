#include "dualstop/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "dualstop/common.hpp"

namespace dualstop {

namespace {

// Golub-Welsch: eigen-decomposition of the Jacobi matrix of the orthogonal polynomials.
GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mass) {
  const auto n = diag.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) jac(i, i) = diag(i);
  for (Eigen::Index i = 0; i + 1 < n; ++i) jac(i, i + 1) = jac(i + 1, i) = off(i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  if (es.info() != Eigen::Success) throw NumericalError("gauss rule: eigen-decomposition failed");

  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    rule.weights[i] = mass * v * v;
  }
  return rule;
}

void require_points(std::size_t n) {
  if (n == 0) throw ConfigError("gauss rule: need at least one node");
}

}  // namespace

GaussRule gauss_legendre(std::size_t n) {
  require_points(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
  for (std::size_t i = 1; i < n; ++i) {
    const double k = static_cast<double>(i);
    off(static_cast<Eigen::Index>(i - 1)) = k / std::sqrt(4.0 * k * k - 1.0);
  }
  auto rule = golub_welsch(diag, off, 2.0);
  // Symmetrize so that the odd moments vanish to rounding.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const auto k = n - 1 - i;
    const double x = 0.5 * (rule.nodes[k] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[k] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[k] = x;
    rule.weights[i] = rule.weights[k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

GaussRule gauss_laguerre(std::size_t n) {
  require_points(n);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
  for (std::size_t i = 0; i < n; ++i) diag(static_cast<Eigen::Index>(i)) = 2.0 * static_cast<double>(i) + 1.0;
  for (std::size_t i = 1; i < n; ++i) off(static_cast<Eigen::Index>(i - 1)) = static_cast<double>(i);
  return golub_welsch(diag, off, 1.0);
}

}  // namespace dualstop
