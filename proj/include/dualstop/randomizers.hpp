#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualstop/common.hpp"
#include "dualstop/market_models.hpp"
#include "dualstop/snell.hpp"

namespace dualstop {

enum class RandomizerKind { none, optimal, naive };

/// Law of the i.i.d. multipliers xi_j; both have mean 0 and support in (-inf, 1].
/// uniform: Uniform[-1, 1]. texp: 1 - Exp(1), density positive at 1.
enum class XiLaw { uniform, texp };

struct RandomizerSpec {
  RandomizerKind kind = RandomizerKind::none;
  double theta = 0.0;                // optimal kind
  std::vector<double> theta_naive;   // naive kind, per date; missing dates are 0
  XiLaw xi = XiLaw::uniform;

  void validate() const;
  static RandomizerSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::string label() const;

  static RandomizerSpec none_spec() { return {}; }
  static RandomizerSpec optimal_spec(double theta, XiLaw law = XiLaw::uniform) {
    return {RandomizerKind::optimal, theta, {}, law};
  }
  static RandomizerSpec naive_spec(std::vector<double> theta_naive, XiLaw law = XiLaw::uniform) {
    return {RandomizerKind::naive, 0.0, std::move(theta_naive), law};
  }
};

/// xi from a uniform u in (0, 1) by inverse CDF.
double xi_from_uniform(XiLaw law, double u);

/// Scale s_j per path and date so that eta_j = s_j xi_j.
/// optimal: theta (Y*_j - Z_j + A*_j); naive: theta_j; none: 0.
Table eta_scales(const RandomizerSpec& spec, const PathBundle& paths, const SnellData* snell);

/// eta_j = s_j xi_j with xi drawn from the stream keyed (seed, "xi", path, date).
Table make_eta(const RandomizerSpec& spec, const PathBundle& paths, const SnellData* snell, std::uint64_t seed);

/// Per path: eta_j <= Y*_j - Z_j + A*_j at every date (tolerance 1e-12).
std::vector<char> check_asl(const Table& eta, const PathBundle& paths, const SnellData& snell);

/// Discrete stand-in for xi: 21-point Gauss-Legendre on [-1, 1] (uniform) or
/// xi = 1 - E with E on 21-point Gauss-Laguerre nodes (texp). Probabilities sum to 1.
struct XiGrid {
  std::vector<double> nodes;
  std::vector<double> probs;
};
const XiGrid& xi_grid(XiLaw law);

/// How E over xi is taken in exact objectives.
enum class XiMode { grid, continuous };

struct MaxMoments {
  double mean = 0.0;
  double second = 0.0;  // E[max^2]
};

/// E[max_j (a_j + s_j xi_j)] and its second moment, xi_j i.i.d. with the given law,
/// s_j >= 0. Grid mode uses xi_grid; continuous mode integrates the exact law.
MaxMoments expected_max(std::span<const double> offsets, std::span<const double> scales, XiLaw law, XiMode mode);

}  // namespace dualstop
