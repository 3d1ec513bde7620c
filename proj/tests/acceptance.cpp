// Acceptance suite: one PASS/FAIL line per criterion and sub-check.
// Usage: acceptance [--criterion N]   (all criteria when N is omitted)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "dualstop/dual_engine.hpp"
#include "dualstop/experiment.hpp"
#include "dualstop/lp_solver.hpp"
#include "dualstop/optimality_lab.hpp"

using namespace dualstop;

namespace {

constexpr std::uint64_t kSeed = 1;

class Report {
 public:
  explicit Report(int criterion) : criterion_(criterion) {}

  void check(const std::string& what, bool ok, const std::string& detail = {}) {
    all_ &= ok;
    std::printf("[%s] C%d %s%s%s\n", ok ? "PASS" : "FAIL", criterion_, what.c_str(), detail.empty() ? "" : ": ",
                detail.c_str());
    std::fflush(stdout);
  }
  void info(const std::string& what) {
    std::printf("[INFO] C%d %s\n", criterion_, what.c_str());
    std::fflush(stdout);
  }
  bool passed() const { return all_; }

 private:
  int criterion_;
  bool all_ = true;
};

std::string fmt(double v, int precision = 10) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// E[max(0, U - a(max(U,1) - 5/4), 1 - a(max(U,1) - 5/4))] for U ~ Uniform[0, 2], by Gauss-Legendre
// on pieces split at the kinks of the integrand.
double stylized_objective(double a) {
  const auto f = [a](double u) {
    const double m = a * (std::max(u, 1.0) - 1.25);
    return 0.5 * std::max({0.0, u - m, 1.0 - m});
  };
  std::vector<double> cuts{0.0, 1.0, 2.0};
  if (a != 1.0) {
    const double k = 1.25 * a / (a - 1.0);
    if (k > 1.0 && k < 2.0) cuts.push_back(k);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double h = (cuts[i + 1] - cuts[i]) / 32.0;
    for (int p = 0; p < 32; ++p) {
      total += boost::math::quadrature::gauss<double, 20>::integrate(f, cuts[i] + p * h, cuts[i] + (p + 1) * h);
    }
  }
  return total;
}

struct TreeSample {
  TreeModel tree;
  PathBundle paths;
  SnellData snell;
  BasisMatrix doob;
};

TreeSample tree_sample(TreeModel tree) {
  auto paths = tree_bundle(tree);
  auto snell = snell_for(paths, &tree);
  auto doob = build_doob_basis(snell);
  return {std::move(tree), std::move(paths), std::move(snell), std::move(doob)};
}

// ---------------------------------------------------------------------------

bool criterion1() {
  Report r(1);
  const auto t0 = std::chrono::steady_clock::now();
  const auto v = run_value(ExperimentConfig::from_json({{"preset", "stylized"}}));
  r.check("value(stylized) == 1.25 exactly", v.y0 == 1.25, fmt(v.y0, 17));

  const auto paths = simulate(StylizedModel{}, 100'000, kSeed);
  const auto snell = stylized_snell(paths);
  double dev = 0.0;
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    dev = std::max(dev, std::abs(pathwise_max(paths.z(n), snell.m.row(n), {}) - 1.25));
  }
  r.check("max |max_j(Z_j - M*_j) - 1.25| over 1e5 paths < 1e-10", dev < 1e-10, fmt(dev, 3));
  const double secs = seconds_since(t0);
  r.check("runtime < 1 s", secs < 1.0, fmt(secs, 3) + " s");
  return r.passed();
}

bool criterion2() {
  Report r(2);
  const auto none = RandomizerSpec::none_spec();
  auto exact_at = [&](const TreeSample& s, double a) {
    return exact_objective(s.paths, s.doob, std::vector<double>{a}, none, &s.snell).mean;
  };
  const auto two = tree_sample(stylized_two_point_tree());
  const auto three = tree_sample(stylized_three_point_tree());

  for (double a : {-4.0, -2.0, 0.0, 1.0, 2.0, 8.0 / 3.0}) {
    const double v = exact_at(two, a);
    r.check("two-point tree, alpha = " + fmt(a, 6) + ": objective == 1.25 within 1e-12", std::abs(v - 1.25) <= 1e-12,
            fmt(v, 17));
  }
  for (double a : {-4.5, 3.0}) {
    const double v = exact_at(two, a);
    r.check("two-point tree, alpha = " + fmt(a, 6) + ": objective > 1.25 + 1e-6", v > 1.25 + 1e-6, fmt(v, 17));
  }
  // The three-point tree {0, 1, 2} has the flat region [-4, 8/3] of the continuous model.
  std::string three_line;
  for (double a : {-4.5, -4.0, 0.0, 8.0 / 3.0, 3.0}) three_line += " alpha=" + fmt(a, 6) + ":" + fmt(exact_at(three, a), 12);
  r.info("three-point tree objectives" + three_line);

  const auto paths = simulate(StylizedModel{}, 100'000, kSeed);
  const auto snell = stylized_snell(paths);
  const auto basis = build_doob_basis(snell);
  for (double a : {-4.5, -4.0, -2.0, 0.0, 1.0, 2.0, 8.0 / 3.0, 3.0}) {
    const auto e = estimate(paths, basis, std::vector<double>{a}, none, &snell, kSeed);
    const double exact = stylized_objective(a);
    const bool ok = std::abs(e.mean - exact) <= 3.0 * e.se + 1e-12;
    r.check("Monte Carlo N = 1e5, alpha = " + fmt(a, 6) + ": |mean - exact| <= 3 SE", ok,
            "mean " + fmt(e.mean) + ", exact " + fmt(exact) + ", SE " + fmt(e.se, 3));
  }
  return r.passed();
}

bool criterion3() {
  Report r(3);
  const auto spec = RandomizerSpec::optimal_spec(1.0);
  for (const auto& [name, tree] : {std::pair{std::string("three-point"), stylized_three_point_tree()},
                                   std::pair{std::string("two-point"), stylized_two_point_tree()}}) {
    const auto s = tree_sample(tree);
    const auto at1 = exact_objective(s.paths, s.doob, std::vector<double>{1.0}, spec, &s.snell);
    r.check(name + " tree, alpha = 1: objective == 1.25 within 1e-10", std::abs(at1.mean - 1.25) <= 1e-10,
            fmt(at1.mean, 17));
    r.check(name + " tree, alpha = 1: variance == 0 within 1e-10", at1.variance <= 1e-10, fmt(at1.variance, 3));
    for (double a : {-2.0, 0.0, 0.5, 1.5, 2.0}) {
      const auto e = exact_objective(s.paths, s.doob, std::vector<double>{a}, spec, &s.snell);
      r.check(name + " tree, alpha = " + fmt(a, 6) + ": objective > 1.25 + 1e-6 and variance > 0",
              e.mean > 1.25 + 1e-6 && e.variance > 0.0, "mean " + fmt(e.mean) + ", variance " + fmt(e.variance, 6));
    }
  }
  return r.passed();
}

bool criterion4() {
  Report r(4);
  for (const auto& [preset, target] : {std::pair{"pa1", 0.164402}, std::pair{"pa2", 0.496182}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = run_value(ExperimentConfig::from_json({{"preset", preset}}));
    const double secs = seconds_since(t0);
    r.check(std::string("value(") + preset + ") within 1e-5 of " + fmt(target), std::abs(v.y0 - target) <= 1e-5,
            fmt(v.y0, 12));
    r.check(std::string("value(") + preset + ") runtime < 1 s", secs < 1.0, fmt(secs, 3) + " s");
  }
  return r.passed();
}

bool criterion5() {
  Report r(5);
  const auto t0 = std::chrono::steady_clock::now();
  struct Result {
    double sigma0, sigma1, m1;
  };
  auto run = [&](const char* preset, const nlohmann::json& family) {
    const auto c = ExperimentConfig::from_json(
        {{"preset", preset},
         {"family", family},
         {"seed", kSeed},
         {"n_paths", 2000},
         {"n_test_paths", 100000},
         {"randomizers", {{{"name", "theta0"}, {"kind", "none"}}, {{"name", "optimal"}, {"kind", "optimal"}, {"theta", 1.0}}}}});
    const auto rows = run_minimize(c);
    const Result res{*rows[0].sigma_test, *rows[1].sigma_test, *rows[1].m_test};
    r.info(std::string(preset) + " " + c.family.name() + ": sigma_test(a0) = " + fmt(res.sigma0, 6) +
           ", sigma_test(a1) = " + fmt(res.sigma1, 6) + ", m_test(a1) = " + fmt(res.m1, 6) +
           ", m_test(a0) = " + fmt(*rows[0].m_test, 6));
    return res;
  };
  const nlohmann::json hermite = {{"kind", "hermite"}, {"K", 3}, {"L", 3}};
  const auto p1m = run("pa1", "msty");
  const auto p1h = run("pa1", hermite);
  const auto p2m = run("pa2", "msty");
  const auto p2h = run("pa2", hermite);

  r.check("pa1 Msty: sigma_test(a0) in [0.20, 0.32]", p1m.sigma0 >= 0.20 && p1m.sigma0 <= 0.32, fmt(p1m.sigma0, 6));
  r.check("pa1 Msty: sigma_test(a1) <= 0.03", p1m.sigma1 <= 0.03, fmt(p1m.sigma1, 6));
  r.check("pa1 Msty: m_test(a1) in [0.163, 0.166]", p1m.m1 >= 0.163 && p1m.m1 <= 0.166, fmt(p1m.m1, 6));
  r.check("pa1 Hermite(3,3): sigma_test(a1) <= 0.10", p1h.sigma1 <= 0.10, fmt(p1h.sigma1, 6));
  r.check("pa2 Msty: sigma_test(a1) <= 0.12", p2m.sigma1 <= 0.12, fmt(p2m.sigma1, 6));
  r.check("pa2 Msty: m_test(a1) in [0.493, 0.500]", p2m.m1 >= 0.493 && p2m.m1 <= 0.500, fmt(p2m.m1, 6));
  r.check("pa1 Msty: ratio sigma_test(a0)/sigma_test(a1) >= 8", p1m.sigma0 / p1m.sigma1 >= 8.0,
          fmt(p1m.sigma0 / p1m.sigma1, 4));
  r.check("pa2 Msty: ratio >= 8", p2m.sigma0 / p2m.sigma1 >= 8.0, fmt(p2m.sigma0 / p2m.sigma1, 4));
  r.check("pa1 Hermite(3,3): ratio >= 4", p1h.sigma0 / p1h.sigma1 >= 4.0, fmt(p1h.sigma0 / p1h.sigma1, 4));
  r.check("pa2 Hermite(3,3): ratio >= 4", p2h.sigma0 / p2h.sigma1 >= 4.0, fmt(p2h.sigma0 / p2h.sigma1, 4));
  const double secs = seconds_since(t0);
  r.check("runtime < 5 min", secs < 300.0, fmt(secs, 3) + " s");
  return r.passed();
}

bool criterion6() {
  Report r(6);
  SequentialRng rng(kSeed);
  const std::vector<RandomizerSpec> randomizers{RandomizerSpec::none_spec(), RandomizerSpec::optimal_spec(1.0)};

  auto mc_suite = [&](const std::string& label, const PathBundle& paths, const SnellData& snell,
                      const std::vector<FamilySpec>& families, double y0) {
    for (const auto& fam : families) {
      const auto basis = build_basis(fam, paths, &snell);
      std::size_t violations = 0;
      double worst = INFINITY;
      for (int t = 0; t < 50; ++t) {
        std::vector<double> alpha(basis.dim());
        for (auto& a : alpha) a = rng.uniform(-1.0, 2.0);
        for (const auto& spec : randomizers) {
          const auto e = estimate(paths, basis, alpha, spec, &snell, kSeed + t);
          const double margin = e.mean + 3.0 * e.se - y0;
          worst = std::min(worst, margin);
          if (margin < 0.0) ++violations;
        }
      }
      r.check(label + " " + fam.name() + ": mean + 3 SE >= Y*_0 for 50 alpha x {none, optimal}", violations == 0,
              "violations " + std::to_string(violations) + ", smallest margin " + fmt(worst, 4));
    }
  };

  {
    const auto paths = simulate(StylizedModel{}, 10'000, derive_seed(kSeed, "weak duality"));
    const auto snell = stylized_snell(paths);
    mc_suite("stylized", paths, snell, {FamilySpec::from_json("single_doob_scalar")}, 1.25);
  }
  for (const auto& [name, model] : {std::pair{"pa1", preset_pa1()}, std::pair{"pa2", preset_pa2()}}) {
    const auto paths = simulate(model, 10'000, derive_seed(kSeed, "weak duality"));
    const auto [y0, snell] = bs_value_and_snell(model, paths);
    mc_suite(name, paths, snell,
             {FamilySpec::from_json("single_doob_scalar"), FamilySpec::from_json("msty"),
              FamilySpec::from_json({{"kind", "hermite"}, {"K", 3}, {"L", 3}})},
             y0);
  }

  // Exact version on trees.
  std::vector<TreeModel> trees{stylized_two_point_tree(), stylized_three_point_tree()};
  for (const RandomTreeOptions& o : {RandomTreeOptions{2, 2, false}, RandomTreeOptions{3, 3, false},
                                     RandomTreeOptions{4, 2, true}}) {
    trees.push_back(random_tree(rng, o));
  }
  std::size_t checks = 0, violations = 0;
  double worst = INFINITY;
  for (const auto& tree : trees) {
    const auto s = tree_sample(tree);
    std::vector<double> naive(tree.horizon() + 1, 0.3);
    for (int t = 0; t < 50; ++t) {
      const double a = rng.uniform(-5.0, 5.0);
      for (const auto& spec : {RandomizerSpec::none_spec(), RandomizerSpec::optimal_spec(1.0),
                               RandomizerSpec::naive_spec(naive), RandomizerSpec::optimal_spec(1.0, XiLaw::texp)}) {
        for (XiMode mode : {XiMode::grid, XiMode::continuous}) {
          const double gap = exact_objective(s.paths, s.doob, std::vector<double>{a}, spec, &s.snell, mode).mean -
                             s.snell.y0;
          worst = std::min(worst, gap);
          ++checks;
          if (gap < -1e-12) ++violations;
        }
      }
    }
  }
  r.check("exact tree objectives >= Y*_0 - 1e-12 (" + std::to_string(checks) + " cases on " +
              std::to_string(trees.size()) + " trees)",
          violations == 0, "smallest gap " + fmt(worst, 4));
  return r.passed();
}

bool criterion7() {
  Report r(7);
  const auto t0 = std::chrono::steady_clock::now();
  SweepOptions options;
  options.seed = kSeed;
  const auto report = run_sweep(options);
  const double secs = seconds_since(t0);

  std::size_t random_trials = 0, max_horizon = 0;
  std::set<std::string> trees;
  for (const auto& t : report.json.at("results")) {
    const auto id = t.at("tree").get<std::string>();
    trees.insert(id);
    if (id.rfind("random_", 0) == 0 && t.at("mode").get<std::string>() != "zero") ++random_trials;
    const auto jpos = id.find("_J");
    if (jpos != std::string::npos) max_horizon = std::max<std::size_t>(max_horizon, std::stoul(id.substr(jpos + 2)));
  }
  r.check(">= 100 random perturbations", random_trials >= 100, std::to_string(random_trials));
  r.check(">= 5 trees, horizon up to 4", trees.size() >= 5 && max_horizon == 4,
          std::to_string(trees.size()) + " trees, max J = " + std::to_string(max_horizon));
  r.check("100% agreement between predicates and brute force", report.failures == 0,
          std::to_string(report.trials) + " trials, " + std::to_string(report.failures) + " failures");
  bool controls = !report.json.at("controls").empty();
  for (const auto& c : report.json.at("controls")) controls &= c.at("ok").get<bool>();
  std::size_t violate_detected = 0, violate_total = 0;
  for (const auto& t : report.json.at("results")) {
    if (t.at("mode") != "violate") continue;
    ++violate_total;
    if (!t.at("predicates").at("thm_main").get<bool>()) ++violate_detected;
  }
  r.check("negative controls detected", controls && violate_detected == violate_total,
          std::to_string(violate_detected) + "/" + std::to_string(violate_total) + " violating perturbations rejected");
  r.info(std::to_string(report.findings) + " findings (zero randomized gap under a discrete xi grid)");
  r.check("runtime < 2 min", secs < 120.0, fmt(secs, 3) + " s");
  return r.passed();
}

bool criterion8() {
  Report r(8);
  SequentialRng rng(kSeed);
  struct Model {
    std::string name;
    PathBundle paths;
    SnellData snell;
  };
  std::vector<Model> models;
  {
    auto paths = simulate(StylizedModel{}, 10'000, kSeed);
    auto snell = stylized_snell(paths);
    models.push_back({"stylized", std::move(paths), std::move(snell)});
  }
  {
    auto paths = simulate(preset_pa1(), 10'000, kSeed);
    auto snell = bs_value_and_snell(preset_pa1(), paths).second;
    models.push_back({"pa1", std::move(paths), std::move(snell)});
  }
  for (const auto& m : models) {
    std::size_t accepted = 0;
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
      // eta_j = theta_j xi_j (Y*_j - Z_j + A*_j) with per-date theta_j in [0, 1] and a random xi law.
      const XiLaw law = c % 2 == 0 ? XiLaw::uniform : XiLaw::texp;
      std::vector<double> theta(m.paths.horizon + 1);
      for (auto& t : theta) t = rng.uniform();
      const auto base = make_eta(RandomizerSpec::optimal_spec(1.0, law), m.paths, &m.snell, rng.next());
      Table eta = base;
      for (std::size_t n = 0; n < eta.rows(); ++n) {
        for (std::size_t j = 0; j < eta.cols(); ++j) eta(n, j) *= theta[j];
      }
      const auto ok = check_asl(eta, m.paths, m.snell);
      if (std::count(ok.begin(), ok.end(), 1) != static_cast<long>(ok.size())) continue;
      ++accepted;
      for (std::size_t n = 0; n < m.paths.n_paths(); ++n) {
        worst = std::max(worst, std::abs(pathwise_max(m.paths.z(n), m.snell.m.row(n), eta.row(n)) - m.snell.y0));
      }
    }
    r.check(m.name + ": 20 eta configurations pass check_asl", accepted == 20, std::to_string(accepted));
    r.check(m.name + ": every pathwise max equals Y*_0 within 1e-9", worst <= 1e-9, "max deviation " + fmt(worst, 3));
  }
  return r.passed();
}

bool criterion9() {
  Report r(9);
  SequentialRng rng(kSeed);
  double worst_gap = 0.0, worst_tight = 0.0;
  std::size_t solved = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 10 + rng.index(41);
    const bool stylized = i % 2 == 0;
    PathBundle paths = stylized ? simulate(StylizedModel{}, n, rng.next()) : simulate(preset_pa1(), n, rng.next());
    const SnellData snell = snell_for(paths);
    BasisMatrix basis;
    if (stylized) {
      basis = build_doob_basis(snell);
    } else {
      const auto full = build_stylized_basis(paths, snell);
      basis = BasisMatrix(FamilyKind::custom, n, 2, 2);
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t j = 0; j <= 2; ++j) {
          basis(p, j, 0) = full(p, j, 0) + full(p, j, 1);
          basis(p, j, 1) = full(p, j, 2) + full(p, j, 3);
        }
      }
    }
    const RandomizerSpec spec = i % 3 == 0   ? RandomizerSpec::none_spec()
                                : i % 3 == 1 ? RandomizerSpec::optimal_spec(rng.uniform())
                                             : RandomizerSpec::naive_spec({0.2, 0.2, 0.2});
    const auto lp = build_lp(paths, basis, spec, &snell, rng.next());
    const auto sol = solve_lp(lp);
    if (sol.status != LPStatus::optimal) {
      r.check("instance " + std::to_string(i) + " solved", false, to_string(sol.status));
      continue;
    }
    ++solved;

    auto objective = [&](const std::vector<double>& alpha) {
      double total = 0.0;
      for (std::size_t p = 0; p < lp.n_paths; ++p) {
        double best = -INFINITY;
        for (std::size_t j = 0; j < lp.n_dates; ++j) {
          const auto b = lp.coef(p, j);
          double v = lp.c(p, j);
          for (std::size_t k = 0; k < lp.n_alpha; ++k) v -= alpha[k] * b[k];
          best = std::max(best, v);
        }
        total += lp.weight(p) * best;
      }
      return total;
    };
    // Coarse-to-fine grid search around the origin, window halving each level.
    std::vector<double> centre(lp.n_alpha, 1.0);
    double width = 8.0, best = objective(centre);
    for (int level = 0; level < 30; ++level) {
      const double h = width / 20.0;
      auto best_point = centre;
      const int span = 20;
      const int count = lp.n_alpha == 1 ? 1 : 2 * span + 1;
      for (int a = -span; a <= span; ++a) {
        for (int b = 0; b < count; ++b) {
          std::vector<double> x = centre;
          x[0] += a * h;
          if (lp.n_alpha == 2) x[1] += (b - span) * h;
          const double v = objective(x);
          if (v < best) {
            best = v;
            best_point = x;
          }
        }
      }
      centre = best_point;
      width *= 0.5;
    }
    worst_gap = std::max(worst_gap, std::abs(best - sol.objective_value));

    for (std::size_t p = 0; p < lp.n_paths; ++p) {
      double best_row = -INFINITY;
      for (std::size_t j = 0; j < lp.n_dates; ++j) {
        const auto b = lp.coef(p, j);
        double v = lp.c(p, j);
        for (std::size_t k = 0; k < lp.n_alpha; ++k) v -= sol.alpha_hat[k] * b[k];
        best_row = std::max(best_row, v);
      }
      worst_tight = std::max(worst_tight, std::abs(sol.u[p] - best_row));
    }
  }
  r.check("20 instances solved to optimality", solved == 20, std::to_string(solved));
  r.check("objective matches grid-search oracle within 1e-4", worst_gap <= 1e-4, "max gap " + fmt(worst_gap, 3));
  r.check("epigraph tightness within 1e-8", worst_tight <= 1e-8, "max slack " + fmt(worst_tight, 3));
  return r.passed();
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<bool()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                    criterion6, criterion7, criterion8, criterion9};
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "criterion must be 1.." << criteria.size() << '\n';
    return 2;
  }
  bool ok = true;
  for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) {
    if (only != 0 && c != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    bool passed = false;
    try {
      passed = criteria[c - 1]();
    } catch (const std::exception& e) {
      std::printf("[FAIL] C%d aborted: %s\n", c, e.what());
    }
    std::printf("== criterion %d: %s (%.2f s)\n", c, passed ? "PASS" : "FAIL", seconds_since(t0));
    ok &= passed;
  }
  return ok ? 0 : 1;
}
