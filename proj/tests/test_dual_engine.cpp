#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "dualstop/dual_engine.hpp"
#include "dualstop/optimality_lab.hpp"
#include "test_support.hpp"

using namespace dualstop;

namespace {

// E[max(0, U - a(max(U,1) - 5/4), 1 - a(max(U,1) - 5/4))] for U ~ Uniform[0, 2].
double stylized_objective(double a) {
  const auto f = [a](double u) {
    const double m = a * (std::max(u, 1.0) - 1.25);
    return 0.5 * std::max({0.0, u - m, 1.0 - m});
  };
  std::vector<double> kinks{1.0};
  // max(u, 1) - m crosses 0 and u - m crosses 1 - m at u = 1.
  for (double u0 : {1.25 * a / (a - 1.0), (1.0 - 1.25 * a) / (1.0 - a) }) {
    if (std::isfinite(u0)) kinks.push_back(u0);
  }
  return oracle::integrate_split(f, 0.0, 2.0, kinks, 64);
}

// Two-point tree objective by hand: paths U = 0.5 and 1.5 with M*_1 = M*_2 = -1/4 and +1/4.
double two_point_objective(double a) {
  const double lo = std::max({0.0, 0.5 + 0.25 * a, 1.0 + 0.25 * a});
  const double hi = std::max({0.0, 1.5 - 0.25 * a, 1.0 - 0.25 * a});
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("dual_engine") {
  TEST_CASE("pathwise maximum") {
    const std::vector<double> z{0.0, 1.5, 1.0}, m{0.0, 0.25, 0.25}, eta{0.1, -0.2, 0.3};
    CHECK(pathwise_max(z, m, {}) == 1.25);
    CHECK(pathwise_max(z, m, eta) == doctest::Approx(1.05));
    CHECK(pathwise_max(std::vector<double>{0.0, 2.0, 1.0}, std::vector<double>{0.0, 0.0, 0.0}, {}) == 2.0);
    CHECK_THROWS_AS(pathwise_max(z, std::vector<double>{0.0}, {}), ConfigError);
  }

  TEST_CASE("summary statistics") {
    const auto e = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(e.mean == 2.5);
    CHECK(e.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(e.n == 4);
    const auto one = summarize({7.0});
    CHECK(one.mean == 7.0);
    CHECK(one.std == 0.0);
    CHECK_THROWS_AS(summarize({}), ConfigError);
  }

  TEST_CASE("stylized estimates for the scaled Doob family") {
    const auto paths = simulate(StylizedModel{}, 200'000, 31);
    const auto snell = stylized_snell(paths);
    const auto basis = build_doob_basis(snell);
    const auto none = RandomizerSpec::none_spec();

    const auto at1 = estimate(paths, basis, std::vector<double>{1.0}, none, &snell, 31);
    CHECK(at1.mean == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(at1.std < 1e-14);

    for (double a : {-4.0, 0.0, 8.0 / 3.0, 4.0, -6.0}) {
      const auto e = estimate(paths, basis, std::vector<double>{a}, none, &snell, 31);
      CHECK(std::abs(e.mean - stylized_objective(a)) < 4.0 * e.se);
      CHECK(e.mean >= 1.25 - 4.0 * e.se);
      if (a != 1.0) CHECK(e.std > 0.0);
    }
    CHECK(stylized_objective(0.0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(stylized_objective(-4.0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(stylized_objective(8.0 / 3.0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(stylized_objective(4.0) > 1.26);
    CHECK(stylized_objective(-6.0) > 1.26);

    const auto randomized =
        estimate(paths, basis, std::vector<double>{1.0}, RandomizerSpec::optimal_spec(1.0), &snell, 31);
    CHECK(randomized.mean == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(randomized.std < 1e-13);
  }

  TEST_CASE("exact tree objective equals the hand formula") {
    const auto tree = stylized_two_point_tree();
    const auto paths = tree_bundle(tree);
    const auto snell = snell_for(paths, &tree);
    const auto basis = build_doob_basis(snell);
    for (double a = -8.0; a <= 8.0; a += 0.5) {
      const auto e = exact_objective(paths, basis, std::vector<double>{a}, RandomizerSpec::none_spec(), &snell);
      CHECK(e.mean == doctest::Approx(two_point_objective(a)).epsilon(1e-14));
      const auto w = estimate_values(paths, eval_family(basis, std::vector<double>{a}), Table());
      CHECK(w.mean == doctest::Approx(e.mean).epsilon(1e-14));
      CHECK(w.std * w.std == doctest::Approx(e.variance).epsilon(1e-12).scale(1.0));
      CHECK(w.se == 0.0);
    }
  }

  TEST_CASE("weak duality holds exactly on trees, with and without randomization") {
    SequentialRng rng(19);
    for (int t = 0; t < 10; ++t) {
      const auto tree = random_tree(rng, {3, 2, false});
      const auto paths = tree_bundle(tree);
      const auto snell = snell_for(paths, &tree);
      const auto basis = build_doob_basis(snell);
      for (double a : {-2.0, -0.3, 0.0, 0.7, 1.0, 1.8}) {
        for (const auto& spec : {RandomizerSpec::none_spec(), RandomizerSpec::optimal_spec(0.5),
                                 RandomizerSpec::naive_spec({0.4, 0.4, 0.4, 0.4}, XiLaw::texp)}) {
          for (XiMode mode : {XiMode::grid, XiMode::continuous}) {
            const auto e = exact_objective(paths, basis, std::vector<double>{a}, spec, &snell, mode);
            CHECK(e.mean >= snell.y0 - 1e-12);
          }
        }
      }
      const auto doob = exact_objective(paths, basis, std::vector<double>{1.0}, RandomizerSpec::none_spec(), &snell);
      CHECK(doob.mean == doctest::Approx(snell.y0).epsilon(1e-13));
      CHECK(doob.variance < 1e-20);
    }
  }

  TEST_CASE("exact objective rejects simulated paths") {
    const auto paths = oracle::stylized_paths({0.5});
    CHECK_THROWS_AS(exact_objective(paths, Table(1, 3), RandomizerSpec::none_spec(), nullptr), ConfigError);
  }

  TEST_CASE("variance profile on the stylized model") {
    const auto paths = simulate(StylizedModel{}, 50'000, 4);
    const auto snell = stylized_snell(paths);
    const auto basis = build_doob_basis(snell);
    std::vector<std::vector<double>> grid;
    for (double a = -4.0; a <= 3.0 + 1e-12; a += 0.25) grid.push_back({a});
    const auto rows = variance_profile(paths, basis, grid, RandomizerSpec::none_spec(), &snell, 4);
    REQUIRE(rows.size() == grid.size());
    std::size_t at1 = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].alpha[0] == 1.0) at1 = i;
      CHECK(rows[i].n == 50'000);
      if (rows[i].alpha[0] <= 8.0 / 3.0) CHECK(std::abs(rows[i].mean - 1.25) < 3.0 * rows[i].se + 1e-12);
    }
    CHECK(rows[at1].std < 1e-14);
    for (const auto& r : rows) CHECK(r.std >= rows[at1].std);

    const auto opt = variance_profile(paths, basis, grid, RandomizerSpec::optimal_spec(1.0), &snell, 4);
    std::size_t best = 0;
    for (std::size_t i = 0; i < opt.size(); ++i) {
      if (opt[i].mean < opt[best].mean) best = i;
    }
    CHECK(opt[best].alpha[0] == 1.0);
    CHECK_THROWS_AS(variance_profile(paths, basis, {}, RandomizerSpec::none_spec(), &snell, 4), ConfigError);
  }

  TEST_CASE("sample objective is convex along lines in alpha") {
    const auto m = preset_pa1();
    const auto paths = simulate(m, 3000, 2);
    const auto snell = bermudan_snell(m, paths, bermudan_value(m).value);
    const auto basis = build_stylized_basis(paths, snell);
    const auto spec = RandomizerSpec::naive_spec({0.16, 0.16, 0.16});
    SequentialRng rng(3);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> a(4), b(4), mid(4);
      for (std::size_t k = 0; k < 4; ++k) {
        a[k] = rng.uniform(-1.0, 3.0);
        b[k] = rng.uniform(-1.0, 3.0);
        mid[k] = 0.5 * (a[k] + b[k]);
      }
      const auto rows = variance_profile(paths, basis, {a, b, mid}, spec, &snell, 2);
      CHECK(rows[2].mean <= 0.5 * (rows[0].mean + rows[1].mean) + 1e-13);
    }
  }

  TEST_CASE("profile CSV round trip") {
    std::vector<ProfileRow> rows{{{0.5, 1.0}, 1.25, 0.1, 0.001, 100}, {{1.0, 1.0}, 1.5, 0.2, 0.002, 100}};
    std::ostringstream out;
    write_profile_csv(out, rows, 1.25);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "alpha_1,alpha_2,mean,std,se,n,rel_dev");
    std::vector<std::vector<double>> parsed;
    while (std::getline(in, line)) {
      std::istringstream cells(line);
      std::string cell;
      auto& row = parsed.emplace_back();
      while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    }
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1][0] == 1.0);
    CHECK(parsed[1][2] == 1.5);
    CHECK(parsed[1][3] == 0.2);
    CHECK(parsed[1][5] == 100.0);
    CHECK(parsed[1][6] == doctest::Approx(0.16));

    std::ostringstream multi;
    write_profile_csv(multi, std::vector<ProfileCurve>{{"theta0", rows}}, 1.25);
    CHECK(multi.str().rfind("curve,alpha_1,alpha_2,mean", 0) == 0);
    CHECK(multi.str().find("\ntheta0,0.5,1,1.25,") != std::string::npos);
  }
}
