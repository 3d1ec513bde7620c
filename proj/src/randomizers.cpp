#include "dualstop/randomizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dualstop/quadrature.hpp"
#include "dualstop/rng.hpp"

namespace dualstop {

namespace {

constexpr std::size_t kGridPoints = 21;
constexpr double kAslTol = 1e-12;
constexpr double kNegativeScaleTol = 1e-12;

XiGrid make_grid(XiLaw law) {
  XiGrid g;
  if (law == XiLaw::uniform) {
    const auto rule = gauss_legendre(kGridPoints);
    g.nodes = rule.nodes;
    for (double w : rule.weights) g.probs.push_back(0.5 * w);
  } else {
    const auto rule = gauss_laguerre(kGridPoints);
    for (double e : rule.nodes) g.nodes.push_back(1.0 - e);
    g.probs = rule.weights;
  }
  return g;
}

struct Split {
  double constant = -std::numeric_limits<double>::infinity();
  bool has_constant = false;
  std::vector<double> a;
  std::vector<double> s;
};

Split split_terms(std::span<const double> offsets, std::span<const double> scales) {
  if (offsets.size() != scales.size() || offsets.empty()) {
    throw ConfigError("expected_max: offsets and scales must be nonempty and of equal length");
  }
  Split out;
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    if (scales[j] < -kNegativeScaleTol) throw ConfigError("expected_max: scales must be nonnegative");
    if (scales[j] <= 0.0) {
      out.constant = std::max(out.constant, offsets[j]);
      out.has_constant = true;
    } else {
      out.a.push_back(offsets[j]);
      out.s.push_back(scales[j]);
    }
  }
  return out;
}

MaxMoments grid_max(const Split& t, const XiGrid& grid) {
  struct Atom {
    double value;
    std::size_t var;
    double prob;
  };
  const std::size_t vars = t.a.size();
  std::vector<Atom> atoms;
  atoms.reserve(vars * grid.nodes.size());
  for (std::size_t j = 0; j < vars; ++j) {
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      atoms.push_back({t.a[j] + t.s[j] * grid.nodes[i], j, grid.probs[i]});
    }
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });

  std::vector<double> cdf(vars, 0.0);
  auto joint = [&] {
    double p = 1.0;
    for (double c : cdf) p *= c;
    return p;
  };
  CompensatedSum m1, m2;
  double below = 0.0;  // P(max of the random terms <= current value)
  // The constant floor collects all mass of the random terms below it.
  std::size_t i = 0;
  if (t.has_constant) {
    while (i < atoms.size() && atoms[i].value <= t.constant) {
      cdf[atoms[i].var] += atoms[i].prob;
      ++i;
    }
    below = joint();
    m1.add(t.constant * below);
    m2.add(t.constant * t.constant * below);
  }
  while (i < atoms.size()) {
    const double v = atoms[i].value;
    while (i < atoms.size() && atoms[i].value == v) {
      cdf[atoms[i].var] += atoms[i].prob;
      ++i;
    }
    const double now = i == atoms.size() ? 1.0 : joint();
    const double mass = now - below;
    m1.add(v * mass);
    m2.add(v * v * mass);
    below = now;
  }
  return {m1.value(), m2.value()};
}

MaxMoments uniform_max(const Split& t) {
  const std::size_t vars = t.a.size();
  std::vector<double> lo(vars), hi(vars);
  double start = t.constant;
  double stop = t.constant;
  for (std::size_t j = 0; j < vars; ++j) {
    lo[j] = t.a[j] - t.s[j];
    hi[j] = t.a[j] + t.s[j];
    start = std::max(start, lo[j]);
    stop = std::max(stop, hi[j]);
  }
  auto cdf = [&](double x) {
    double p = 1.0;
    for (std::size_t j = 0; j < vars; ++j) p *= std::clamp((x - lo[j]) / (hi[j] - lo[j]), 0.0, 1.0);
    return p;
  };
  auto density = [&](double x) {
    double total = 0.0;
    for (std::size_t j = 0; j < vars; ++j) {
      if (x <= lo[j] || x >= hi[j]) continue;
      double p = 1.0 / (hi[j] - lo[j]);
      for (std::size_t i = 0; i < vars && p != 0.0; ++i) {
        if (i != j) p *= std::clamp((x - lo[i]) / (hi[i] - lo[i]), 0.0, 1.0);
      }
      total += p;
    }
    return total;
  };

  CompensatedSum m1, m2;
  if (t.has_constant) {
    const double floor_mass = cdf(t.constant);
    m1.add(t.constant * floor_mass);
    m2.add(t.constant * t.constant * floor_mass);
  }
  std::vector<double> breaks{start, stop};
  for (std::size_t j = 0; j < vars; ++j) {
    if (lo[j] > start && lo[j] < stop) breaks.push_back(lo[j]);
    if (hi[j] > start && hi[j] < stop) breaks.push_back(hi[j]);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // The density is a polynomial of degree < vars on every piece.
  const auto rule = gauss_legendre(vars + 3);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double mid = 0.5 * (breaks[p] + breaks[p + 1]);
    const double half = 0.5 * (breaks[p + 1] - breaks[p]);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double x = mid + half * rule.nodes[k];
      const double w = half * rule.weights[k] * density(x);
      m1.add(x * w);
      m2.add(x * x * w);
    }
  }
  return {m1.value(), m2.value()};
}

MaxMoments texp_max(const Split& t) {
  // X_j = u_j - s_j E with u_j = a_j + s_j, so P(X_j <= x) = exp((x - u_j) / s_j) for x <= u_j.
  const std::size_t vars = t.a.size();
  std::vector<std::size_t> order(vars);
  std::vector<double> u(vars);
  for (std::size_t j = 0; j < vars; ++j) {
    u[j] = t.a[j] + t.s[j];
    order[j] = j;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return u[x] < u[y]; });

  CompensatedSum m1, m2;
  if (t.has_constant) {
    double log_mass = 0.0;
    for (std::size_t j = 0; j < vars; ++j) log_mass += std::min(0.0, (t.constant - u[j]) / t.s[j]);
    const double floor_mass = std::exp(log_mass);
    m1.add(t.constant * floor_mass);
    m2.add(t.constant * t.constant * floor_mass);
  }
  // Piece r runs up to u[order[r]]; variables order[r..] are still below their caps there.
  double lower = t.has_constant ? t.constant : -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < vars; ++r) {
    const double upper = u[order[r]];
    if (upper <= lower) continue;
    double lambda = 0.0;
    double kappa = 0.0;
    for (std::size_t q = r; q < vars; ++q) {
      lambda += 1.0 / t.s[order[q]];
      kappa += u[order[q]] / t.s[order[q]];
    }
    // Antiderivatives of x^k * lambda * exp(lambda x - kappa).
    auto g = [&](double x, int k) {
      if (std::isinf(x)) return 0.0;
      const double e = std::exp(lambda * x - kappa);
      if (k == 0) return e;
      if (k == 1) return e * (x - 1.0 / lambda);
      return e * (x * x - 2.0 * x / lambda + 2.0 / (lambda * lambda));
    };
    m1.add(g(upper, 1) - g(lower, 1));
    m2.add(g(upper, 2) - g(lower, 2));
    lower = upper;
  }
  return {m1.value(), m2.value()};
}

}  // namespace

void RandomizerSpec::validate() const {
  if (!std::isfinite(theta) || theta < 0.0) throw ConfigError("randomizer: theta must be finite and >= 0");
  for (double v : theta_naive) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("randomizer: theta_naive entries must be finite and >= 0");
  }
}

RandomizerSpec RandomizerSpec::from_json(const nlohmann::json& j) {
  RandomizerSpec r;
  const auto kind = j.value("kind", std::string("none"));
  if (kind == "none") {
    r.kind = RandomizerKind::none;
  } else if (kind == "optimal") {
    r.kind = RandomizerKind::optimal;
  } else if (kind == "naive") {
    r.kind = RandomizerKind::naive;
  } else {
    throw ConfigError("randomizer: unknown kind '" + kind + "' (none | optimal | naive)");
  }
  r.theta = j.value("theta", r.kind == RandomizerKind::optimal ? 1.0 : 0.0);
  if (j.contains("theta_naive")) {
    const auto& t = j.at("theta_naive");
    r.theta_naive = t.is_array() ? t.get<std::vector<double>>() : std::vector<double>{t.get<double>()};
  }
  const auto xi = j.value("xi", std::string("uniform"));
  if (xi == "uniform") {
    r.xi = XiLaw::uniform;
  } else if (xi == "texp") {
    r.xi = XiLaw::texp;
  } else {
    throw ConfigError("randomizer: unknown xi law '" + xi + "' (uniform | texp)");
  }
  r.validate();
  return r;
}

nlohmann::json RandomizerSpec::to_json() const {
  static const char* kinds[] = {"none", "optimal", "naive"};
  return {{"kind", kinds[static_cast<int>(kind)]},
          {"theta", theta},
          {"theta_naive", theta_naive},
          {"xi", xi == XiLaw::uniform ? "uniform" : "texp"}};
}

std::string RandomizerSpec::label() const {
  std::ostringstream out;
  switch (kind) {
    case RandomizerKind::none:
      return "none";
    case RandomizerKind::optimal:
      out << "optimal(theta=" << theta << ')';
      break;
    case RandomizerKind::naive:
      out << "naive(";
      for (std::size_t j = 0; j < theta_naive.size(); ++j) out << (j ? "," : "") << theta_naive[j];
      out << ')';
      break;
  }
  return out.str();
}

double xi_from_uniform(XiLaw law, double u) {
  return law == XiLaw::uniform ? 2.0 * u - 1.0 : 1.0 + std::log(u);
}

Table eta_scales(const RandomizerSpec& spec, const PathBundle& paths, const SnellData* snell) {
  spec.validate();
  const auto J = paths.horizon;
  Table s(paths.n_paths(), J + 1);
  switch (spec.kind) {
    case RandomizerKind::none:
      break;
    case RandomizerKind::optimal:
      if (!snell) throw ConfigError("optimal randomizer needs Snell data");
      if (snell->n_paths() != paths.n_paths()) throw ConfigError("optimal randomizer: Snell data does not match paths");
      for (std::size_t n = 0; n < paths.n_paths(); ++n) {
        const auto z = paths.z(n);
        for (std::size_t j = 0; j <= J; ++j) s(n, j) = spec.theta * snell->slack(z, n, j);
      }
      break;
    case RandomizerKind::naive:
      for (std::size_t n = 0; n < paths.n_paths(); ++n) {
        for (std::size_t j = 0; j <= J && j < spec.theta_naive.size(); ++j) s(n, j) = spec.theta_naive[j];
      }
      break;
  }
  return s;
}

Table make_eta(const RandomizerSpec& spec, const PathBundle& paths, const SnellData* snell, std::uint64_t seed) {
  Table eta = eta_scales(spec, paths, snell);
  if (spec.kind == RandomizerKind::none) return eta;
  const KeyedStream stream(seed, "xi");
  for (std::size_t n = 0; n < eta.rows(); ++n) {
    for (std::size_t j = 0; j < eta.cols(); ++j) {
      if (eta(n, j) != 0.0) eta(n, j) *= xi_from_uniform(spec.xi, stream.uniform(n, j));
    }
  }
  return eta;
}

std::vector<char> check_asl(const Table& eta, const PathBundle& paths, const SnellData& snell) {
  if (eta.rows() != paths.n_paths() || snell.n_paths() != paths.n_paths() || eta.cols() != paths.horizon + 1) {
    throw ConfigError("check_asl: dimension mismatch");
  }
  std::vector<char> ok(eta.rows(), 1);
  for (std::size_t n = 0; n < eta.rows(); ++n) {
    const auto z = paths.z(n);
    for (std::size_t j = 0; j < eta.cols(); ++j) {
      if (eta(n, j) > snell.slack(z, n, j) + kAslTol) {
        ok[n] = 0;
        break;
      }
    }
  }
  return ok;
}

const XiGrid& xi_grid(XiLaw law) {
  static const XiGrid uniform = make_grid(XiLaw::uniform);
  static const XiGrid texp = make_grid(XiLaw::texp);
  return law == XiLaw::uniform ? uniform : texp;
}

MaxMoments expected_max(std::span<const double> offsets, std::span<const double> scales, XiLaw law, XiMode mode) {
  const auto t = split_terms(offsets, scales);
  if (t.a.empty()) return {t.constant, t.constant * t.constant};
  if (mode == XiMode::grid) return grid_max(t, xi_grid(law));
  return law == XiLaw::uniform ? uniform_max(t) : texp_max(t);
}

}  // namespace dualstop
