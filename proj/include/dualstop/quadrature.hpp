#pragma once

#include <cstddef>
#include <vector>

namespace dualstop {

/// Nodes and weights of a Gaussian rule; weights sum to the mass of the weight function.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (weights sum to 2).
GaussRule gauss_legendre(std::size_t n);

/// n-point Gauss-Laguerre rule for the weight e^{-x} on [0, inf) (weights sum to 1).
GaussRule gauss_laguerre(std::size_t n);

}  // namespace dualstop
