#include <doctest.h>

#include <cmath>

#include "dualstop/optimality_lab.hpp"
#include "test_support.hpp"

using namespace dualstop;

namespace {

NodeValues scaled_doob(const TreeLab& lab, double alpha) {
  auto s = lab.doob();
  for (auto& v : s) v *= 1.0 - alpha;
  return s;
}

// E[max_r (Z_r - M_r)] by direct enumeration of the tree.
double dual_value(const TreeLab& lab, const NodeValues& m) {
  double total = 0.0;
  for (const auto& p : oracle::walk(lab.tree())) {
    double best = -INFINITY;
    for (auto v : p.nodes) best = std::max(best, lab.tree().node(v).reward - m[v]);
    total += p.prob * best;
  }
  return total;
}

}  // namespace

TEST_SUITE("optimality_lab") {
  TEST_CASE("scaled Doob martingales on the three-point tree") {
    const TreeLab lab(stylized_three_point_tree());
    CHECK(lab.snell().y0() == doctest::Approx(1.25));
    struct Case {
      double alpha;
      bool weak0, sure0;
    };
    for (const Case c : {Case{1.0, true, true}, Case{0.0, true, false}, Case{2.0, true, false},
                         Case{2.6, true, false}, Case{-3.9, true, false}, Case{3.0, false, false},
                         Case{-4.5, false, false}}) {
      const auto s = scaled_doob(lab, c.alpha);
      const auto m = lab.shifted(s);
      CHECK(lab.is_weakly_optimal_at(m, 0) == c.weak0);
      CHECK(lab.is_surely_optimal_at(m, 0) == c.sure0);
      const auto [w, su] = lab.check_thm_i0(s);
      CHECK(w == c.weak0);
      CHECK(su == c.sure0);
      CHECK((std::abs(dual_value(lab, m) - 1.25) < 1e-12) == c.weak0);
    }
  }

  TEST_CASE("scaled Doob martingales on the two-point tree") {
    const TreeLab lab(stylized_two_point_tree());
    for (double a : {-3.9, 0.0, 2.0, 5.0, 5.9}) CHECK(lab.is_weakly_optimal_at(lab.shifted(scaled_doob(lab, a)), 0));
    for (double a : {-4.5, 6.5, 7.0}) CHECK_FALSE(lab.is_weakly_optimal_at(lab.shifted(scaled_doob(lab, a)), 0));
  }

  TEST_CASE("the Doob martingale satisfies every condition") {
    const TreeLab lab(stylized_three_point_tree());
    const NodeValues zero(lab.tree().node_count(), 0.0);
    CHECK(lab.check_thm_main(zero));
    CHECK(lab.check_cor_eqco(zero));
    CHECK(lab.check_cor_alms(zero));
    CHECK(lab.check_thm_i0(zero) == std::pair{true, true});
    CHECK(lab.check_sufficient_i0(zero) == std::pair{true, true});
    CHECK(lab.is_surely_optimal(lab.doob()));
    CHECK(lab.pathwise_max_at_tau(lab.doob()));
  }

  TEST_CASE("non-martingales are rejected") {
    const TreeLab lab(stylized_three_point_tree());
    NodeValues drift(lab.tree().node_count(), 0.0);
    for (auto c : lab.tree().node(0).children) drift[c] = 0.1;
    CHECK_FALSE(lab.is_martingale(drift));
    CHECK_THROWS_AS(lab.is_weakly_optimal_at(lab.shifted(drift), 0), ConfigError);
    CHECK_THROWS_AS(lab.is_surely_optimal_at(lab.shifted(drift), 0), ConfigError);
    CHECK_FALSE(lab.check_thm_main(drift));
    CHECK_FALSE(lab.check_cor_eqco(drift));
    CHECK_FALSE(lab.check_cor_alms(drift));
    CHECK(lab.check_thm_i0(drift) == std::pair{false, false});
  }

  TEST_CASE("predicates agree with brute force on random perturbations") {
    SequentialRng rng(23);
    for (int t = 0; t < 6; ++t) {
      const TreeLab lab(random_tree(rng, {3, 2, t % 2 == 1}));
      for (PerturbationMode mode : {PerturbationMode::feasible, PerturbationMode::sure, PerturbationMode::weak0,
                                    PerturbationMode::sure0, PerturbationMode::free, PerturbationMode::violate}) {
        for (int k = 0; k < 8; ++k) {
          const auto s = random_perturbation(lab, rng, mode, rng.uniform(0.1, 1.0));
          REQUIRE(lab.is_martingale(s));
          const auto m = lab.shifted(s);
          CHECK(lab.check_thm_main(s) == lab.is_weakly_optimal(m));
          CHECK(lab.check_cor_eqco(s) == lab.check_thm_main(s));
          CHECK(lab.check_cor_alms(s) == lab.is_surely_optimal(m));
          const auto [w0, s0] = lab.check_thm_i0(s);
          CHECK(w0 == lab.is_weakly_optimal_at(m, 0));
          CHECK(s0 == lab.is_surely_optimal_at(m, 0));
          CHECK(w0 == (std::abs(dual_value(lab, m) - lab.snell().y0()) < 1e-10));
          const auto [sw, ss] = lab.check_sufficient_i0(s);
          if (sw) CHECK(w0);
          if (ss) CHECK(s0);
          if (w0) CHECK(lab.pathwise_max_at_tau(m));
          if (mode == PerturbationMode::feasible) CHECK(lab.check_thm_main(s));
          if (mode == PerturbationMode::sure) CHECK(lab.check_cor_alms(s));
          if (mode == PerturbationMode::weak0) CHECK(w0);
          if (mode == PerturbationMode::sure0) CHECK(s0);
        }
      }
    }
  }

  TEST_CASE("optimal martingales form a convex set") {
    SequentialRng rng(8);
    const TreeLab lab(random_tree(rng, {3, 3, false}));
    for (int t = 0; t < 20; ++t) {
      const auto a = random_perturbation(lab, rng, PerturbationMode::feasible, 1.0);
      const auto b = random_perturbation(lab, rng, PerturbationMode::feasible, 1.0);
      const double w = rng.uniform();
      NodeValues mix(a.size());
      for (std::size_t v = 0; v < a.size(); ++v) mix[v] = w * a[v] + (1.0 - w) * b[v];
      CHECK(lab.check_thm_main(mix));
      CHECK(lab.is_weakly_optimal(lab.shifted(mix)));
    }
  }

  TEST_CASE("optimal randomization separates surely optimal martingales") {
    const TreeLab lab(stylized_three_point_tree());
    const NodeValues zero(lab.tree().node_count(), 0.0);
    for (XiLaw law : {XiLaw::uniform, XiLaw::texp}) {
      for (XiMode mode : {XiMode::grid, XiMode::continuous}) {
        const auto r = lab.check_thm_opran(zero, law, mode);
        CHECK(std::abs(r.gap) < 1e-13);
        CHECK(r.variance < 1e-13);
      }
    }
    const auto s = scaled_doob(lab, 0.5);
    const auto r = lab.check_thm_opran(s, XiLaw::texp, XiMode::continuous);
    CHECK(r.gap > 1e-6);
    CHECK(r.variance > 1e-6);
    CHECK_THROWS_AS(lab.check_thm_opran(scaled_doob(lab, 3.0)), ConfigError);
  }

  TEST_CASE("single-branch tree admits only the zero perturbation") {
    const TreeModel tree(2, {{{"r", 0.0, "", 1.0}}, {{"a", 2.0, "r", 1.0}}, {{"b", 1.0, "a", 1.0}}});
    const TreeLab lab(tree);
    CHECK(lab.snell().y0() == 2.0);
    NodeValues s(tree.node_count(), 0.0);
    CHECK(lab.check_thm_main(s));
    CHECK(lab.is_surely_optimal(lab.doob()));
    s[1] = 0.5;
    CHECK_FALSE(lab.is_martingale(s));
    SequentialRng rng(1);
    const auto p = random_perturbation(lab, rng, PerturbationMode::free, 1.0);
    for (double v : p) CHECK(v == 0.0);
  }

  TEST_CASE("random trees are valid and reproducible") {
    SequentialRng a(4), b(4);
    const auto ta = random_tree(a, {4, 3, true});
    const auto tb = random_tree(b, {4, 3, true});
    CHECK(ta.to_json() == tb.to_json());
    CHECK(ta.path_count() == 81);
    CHECK_THROWS_AS(random_tree(a, {0, 2, false}), ConfigError);
  }

  TEST_CASE("full sweep finds every equivalence") {
    SweepOptions opts;
    opts.perturbations_per_tree = 30;
    const auto report = run_sweep(opts);
    CHECK(report.passed());
    CHECK(report.failures == 0);
    CHECK(report.trials > 100);
    CHECK(report.json.at("passed").get<bool>());
    CHECK(report.json.at("results").size() == report.trials);
    for (const auto& c : report.json.at("controls")) CHECK(c.at("ok").get<bool>());
  }

  TEST_CASE("sweep on a user tree") {
    SweepOptions opts;
    opts.perturbations_per_tree = 40;
    const auto report = run_tree_sweep(TreeModel::load(DUALSTOP_TEST_DATA "/two_point_tree.json"), opts);
    CHECK(report.passed());
    CHECK(report.trials == 41);
  }

  TEST_CASE("corrupted tree fixtures are rejected") {
    auto j = TreeModel::load(DUALSTOP_TEST_DATA "/two_point_tree.json").to_json();
    j["dates"][1][0]["prob"] = 0.7;
    CHECK_THROWS_AS(TreeModel::from_json(j), ConfigError);
    j["dates"][1][0]["prob"] = 0.5;
    j["dates"][2][0]["parent"] = "nowhere";
    CHECK_THROWS_AS(TreeModel::from_json(j), ConfigError);
  }
}
