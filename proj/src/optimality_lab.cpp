#include "dualstop/optimality_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualstop/dual_engine.hpp"

namespace dualstop {

namespace {

constexpr double kTol = 1e-10;
constexpr double kGapTol = 1e-9;
constexpr double kZeroTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TreeLab::TreeLab(TreeModel tree)
    : tree_(std::move(tree)), snell_(backward_induct(tree_)), paths_(tree_bundle(tree_)),
      path_snell_(snell_on_paths(tree_, snell_, paths_)) {
  const auto count = tree_.node_count();
  tau_.resize(count);
  prev_tau_.resize(count);
  for (std::size_t v = 0; v < count; ++v) {
    const auto& node = tree_.node(v);
    tau_[v] = node.date == tree_.horizon() || node.reward >= snell_.cont[v] - kExerciseTol;
    prev_tau_[v] = v == 0 ? -1 : (tau_[node.parent] ? static_cast<long>(node.parent) : prev_tau_[node.parent]);
  }
}

NodeValues TreeLab::shifted(const NodeValues& s) const {
  NodeValues m = snell_.m;
  for (std::size_t v = 0; v < m.size(); ++v) m[v] -= s[v];
  return m;
}

template <class F>
bool TreeLab::all_edges(F&& f) const {
  for (std::size_t v = 0; v < tree_.node_count(); ++v) {
    for (auto c : tree_.node(v).children) {
      if (!f(v, c)) return false;
    }
  }
  return true;
}

bool TreeLab::is_martingale(const NodeValues& x, double tol) const {
  if (x.size() != tree_.node_count()) throw ConfigError("tree process has the wrong number of nodes");
  if (std::abs(x[0]) > tol) return false;
  for (std::size_t v = 0; v < tree_.node_count(); ++v) {
    const auto& node = tree_.node(v);
    if (node.children.empty()) continue;
    CompensatedSum drift;
    for (auto c : node.children) drift.add(tree_.node(c).prob * (x[c] - x[v]));
    if (std::abs(drift.value()) > tol) return false;
  }
  return true;
}

void TreeLab::require_martingale(const NodeValues& m) const {
  if (!is_martingale(m)) throw ConfigError("optimality check: M is not a martingale starting at 0 on this tree");
}

std::vector<double> TreeLab::along(const NodeValues& x, std::size_t n) const {
  std::vector<double> out;
  out.reserve(paths_.nodes[n].size());
  for (auto v : paths_.nodes[n]) out.push_back(x[v]);
  return out;
}

bool TreeLab::is_weakly_optimal_at(const NodeValues& m, std::size_t j) const {
  require_martingale(m);
  std::vector<CompensatedSum> acc(tree_.node_count());
  for (std::size_t n = 0; n < paths_.n_paths(); ++n) {
    const auto& nodes = paths_.nodes[n];
    double best = -kInf;
    for (std::size_t r = j; r < nodes.size(); ++r) best = std::max(best, tree_.node(nodes[r]).reward - m[nodes[r]]);
    acc[nodes[j]].add(paths_.weight(n) * (best + m[nodes[j]]));
  }
  const auto [lo, hi] = tree_.date_range(j);
  for (auto v = lo; v < hi; ++v) {
    if (std::abs(acc[v].value() / tree_.node(v).reach_prob - snell_.y[v]) > kTol) return false;
  }
  return true;
}

bool TreeLab::is_surely_optimal_at(const NodeValues& m, std::size_t j) const {
  require_martingale(m);
  for (const auto& nodes : paths_.nodes) {
    double best = -kInf;
    for (std::size_t r = j; r < nodes.size(); ++r) best = std::max(best, tree_.node(nodes[r]).reward - m[nodes[r]]);
    if (std::abs(best + m[nodes[j]] - snell_.y[nodes[j]]) > kTol) return false;
  }
  return true;
}

bool TreeLab::is_weakly_optimal(const NodeValues& m) const {
  for (std::size_t j = 0; j <= tree_.horizon(); ++j) {
    if (!is_weakly_optimal_at(m, j)) return false;
  }
  return true;
}

bool TreeLab::is_surely_optimal(const NodeValues& m) const {
  for (std::size_t j = 0; j <= tree_.horizon(); ++j) {
    if (!is_surely_optimal_at(m, j)) return false;
  }
  return true;
}

bool TreeLab::check_thm_main(const NodeValues& s) const {
  if (!is_martingale(s)) return false;
  for (std::size_t v = 0; v < tree_.node_count(); ++v) {
    const long prev = prev_tau_[v];
    // Walk back over the current segment (prev, v].
    double worst = -kInf;
    for (long r = static_cast<long>(v); r != prev; r = static_cast<long>(tree_.node(r).parent)) {
      worst = std::max(worst, tree_.node(r).reward - snell_.y[r] + s[r]);
      if (r == 0) break;
    }
    if (worst - s[v] > kTol) return false;
    if (prev >= 0 && tree_.node(prev).reward - snell_.cont[prev] + s[prev] - s[v] < -kTol) return false;
  }
  return true;
}

bool TreeLab::check_cor_eqco(const NodeValues& s) const {
  if (!is_martingale(s)) return false;
  return all_edges([&](std::size_t v, std::size_t c) {
    const double zeta = s[c] - s[v];
    if (tau_[v]) return zeta <= tree_.node(v).reward - snell_.cont[v] + kTol;
    const long prev = prev_tau_[v];
    double lower = -kInf;
    for (long r = static_cast<long>(v); r != prev; r = static_cast<long>(tree_.node(r).parent)) {
      lower = std::max(lower, tree_.node(r).reward - snell_.y[r] + s[r]);
      if (r == 0) break;
    }
    if (zeta < lower - s[v] - kTol) return false;
    if (prev >= 0 && zeta > tree_.node(prev).reward - snell_.cont[prev] + s[prev] - s[v] + kTol) return false;
    return true;
  });
}

std::pair<bool, bool> TreeLab::check_thm_i0(const NodeValues& s) const {
  if (!is_martingale(s)) return {false, false};
  bool weak = true;
  bool sure = true;
  for (std::size_t n = 0; n < paths_.n_paths(); ++n) {
    const auto& nodes = paths_.nodes[n];
    const auto tau = static_cast<std::size_t>(path_snell_.tau_star[n]);
    double running = -kInf;  // max_{0<=r<j}(Z_r - Y_r + S_r)
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const auto v = nodes[j];
      if (j <= tau) {
        if (running - s[v] > kTol) weak = false;
        if (std::abs(s[v]) > kTol) sure = false;
      } else {
        const double slack = snell_.y[v] - tree_.node(v).reward + snell_.a[v];
        if (s[v] - s[nodes[tau]] > slack + kTol) weak = false;
        if (s[v] > slack + kTol) sure = false;
      }
      running = std::max(running, tree_.node(v).reward - snell_.y[v] + s[v]);
    }
  }
  return {weak, sure};
}

std::pair<bool, bool> TreeLab::check_sufficient_i0(const NodeValues& s) const {
  if (!is_martingale(s)) return {false, false};
  bool weak = true;
  bool sure = true;
  for (std::size_t n = 0; n < paths_.n_paths(); ++n) {
    const auto& nodes = paths_.nodes[n];
    const auto tau = static_cast<std::size_t>(path_snell_.tau_star[n]);
    double running = -kInf;
    for (std::size_t j = 1; j < nodes.size(); ++j) {
      const auto v = nodes[j];
      const auto p = nodes[j - 1];
      running = std::max(running, tree_.node(p).reward - snell_.y[p] + s[p]);
      const double zeta = s[v] - s[p];
      if (j <= tau) {
        if (zeta < running - s[p] - kTol) weak = false;
        if (std::abs(zeta) > kTol) sure = false;
      } else {
        if (zeta > snell_.a[v] + s[nodes[tau]] - s[p] + kTol) weak = false;
        if (zeta > snell_.a[v] - s[p] + kTol) sure = false;
      }
    }
  }
  return {weak, sure};
}

bool TreeLab::check_cor_alms(const NodeValues& s) const {
  if (!is_martingale(s)) return false;
  return all_edges([&](std::size_t v, std::size_t c) {
    const double zeta = s[c] - s[v];
    if (tau_[v]) return zeta <= tree_.node(v).reward - snell_.cont[v] + kTol;
    return std::abs(zeta) <= kTol;
  });
}

bool TreeLab::pathwise_max_at_tau(const NodeValues& m) const {
  for (std::size_t n = 0; n < paths_.n_paths(); ++n) {
    const auto& nodes = paths_.nodes[n];
    double best = -kInf;
    for (auto v : nodes) best = std::max(best, tree_.node(v).reward - m[v]);
    const auto t = nodes[static_cast<std::size_t>(path_snell_.tau_star[n])];
    if (std::abs(best - (tree_.node(t).reward - m[t])) > kTol) return false;
  }
  return true;
}

TreeLab::Randomized TreeLab::check_thm_opran(const NodeValues& s, XiLaw law, XiMode mode) const {
  const auto m = shifted(s);
  if (!is_weakly_optimal_at(m, 0)) throw ConfigError("check_thm_opran: M* - S is not weakly optimal at 0");
  Table mt(paths_.n_paths(), tree_.horizon() + 1);
  for (std::size_t n = 0; n < paths_.n_paths(); ++n) {
    const auto vals = along(m, n);
    std::copy(vals.begin(), vals.end(), mt.row(n).begin());
  }
  const auto spec = RandomizerSpec::optimal_spec(1.0, law);
  const auto e = exact_objective(paths_, mt, spec, &path_snell_, mode);
  return {e.mean - snell_.y0(), e.variance};
}

TreeModel random_tree(SequentialRng& rng, const RandomTreeOptions& options) {
  if (options.horizon < 1 || options.branching < 1) throw ConfigError("random_tree: need horizon >= 1 and branching >= 1");
  const auto J = options.horizon;
  const auto b = options.branching;
  auto draw_reward = [&] { return rng.uniform() < 0.35 ? rng.uniform(0.8, 2.0) : rng.uniform(0.0, 1.0); };
  auto draw_probs = [&] {
    std::vector<double> p(b);
    double total = 0.0;
    for (auto& x : p) total += (x = rng.uniform(0.2, 1.0));
    double used = 0.0;
    for (std::size_t i = 0; i + 1 < b; ++i) used += (p[i] /= total);
    p[b - 1] = 1.0 - used;
    return p;
  };

  // Recombining trees share rewards and branch probabilities per (date, level).
  std::vector<std::vector<double>> level_reward(J + 1);
  for (std::size_t d = 0; d <= J; ++d) {
    for (std::size_t l = 0; l <= d * (b - 1); ++l) level_reward[d].push_back(draw_reward());
  }
  const auto shared_probs = draw_probs();

  std::vector<std::vector<NodeSpec>> dates(J + 1);
  std::vector<std::size_t> level{0};
  dates[0].push_back({"n0", options.recombining ? level_reward[0][0] : draw_reward(), "", 1.0});
  for (std::size_t d = 1; d <= J; ++d) {
    std::vector<std::size_t> next_level;
    for (std::size_t i = 0; i < dates[d - 1].size(); ++i) {
      const auto probs = options.recombining ? shared_probs : draw_probs();
      for (std::size_t c = 0; c < b; ++c) {
        const auto l = level[i] + c;
        const auto id = "n" + std::to_string(d) + "_" + std::to_string(dates[d].size());
        const double reward = options.recombining ? level_reward[d][l] : draw_reward();
        dates[d].push_back({id, reward, dates[d - 1][i].id, probs[c]});
        next_level.push_back(l);
      }
    }
    level = std::move(next_level);
  }
  return TreeModel(J, dates);
}

std::string to_string(PerturbationMode mode) {
  switch (mode) {
    case PerturbationMode::feasible:
      return "feasible";
    case PerturbationMode::sure:
      return "sure";
    case PerturbationMode::weak0:
      return "weak0";
    case PerturbationMode::sure0:
      return "sure0";
    case PerturbationMode::free:
      return "free";
    case PerturbationMode::violate:
      return "violate";
  }
  return "?";
}

namespace {

// Moves increments toward zero until sum_c p_c zeta_c = 0; each value stays between 0 and where it was.
void center(std::vector<double>& zeta, const std::vector<double>& probs) {
  double pos = 0.0;
  double neg = 0.0;
  for (std::size_t c = 0; c < zeta.size(); ++c) {
    if (zeta[c] > 0) pos += probs[c] * zeta[c];
    if (zeta[c] < 0) neg -= probs[c] * zeta[c];
  }
  if (pos <= 0.0 || neg <= 0.0) {
    std::fill(zeta.begin(), zeta.end(), 0.0);
    return;
  }
  const bool shrink_pos = pos > neg;
  const double factor = shrink_pos ? neg / pos : pos / neg;
  for (auto& z : zeta) {
    if (shrink_pos ? z > 0 : z < 0) z *= factor;
  }
  // Absorb the rounding residue in the largest-probability child.
  CompensatedSum mean;
  for (std::size_t c = 0; c < zeta.size(); ++c) mean.add(probs[c] * zeta[c]);
  const auto big = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  zeta[big] -= mean.value() / probs[big];
}

}  // namespace

NodeValues random_perturbation(const TreeLab& lab, SequentialRng& rng, PerturbationMode mode, double scale) {
  const auto& tree = lab.tree();
  const auto& sn = lab.snell();
  NodeValues s(tree.node_count(), 0.0);

  std::vector<std::size_t> inner;
  for (std::size_t v = 0; v < tree.node_count(); ++v) {
    if (tree.node(v).children.size() >= 2) inner.push_back(v);
  }
  const std::size_t target = inner.empty() ? tree.node_count() : inner[rng.index(inner.size())];

  // First exercise node on the path to v (inclusive), -1 if none yet.
  std::vector<long> first_tau(tree.node_count(), -1);
  for (std::size_t v = 0; v < tree.node_count(); ++v) {
    const long up = v == 0 ? -1 : first_tau[tree.node(v).parent];
    first_tau[v] = up >= 0 ? up : (lab.is_tau(v) ? static_cast<long>(v) : -1);
  }

  for (std::size_t v = 0; v < tree.node_count(); ++v) {
    const auto& node = tree.node(v);
    if (node.children.empty()) continue;
    double lo = -kInf;
    double hi = kInf;
    const long prev = lab.previous_tau(v);
    auto segment_max = [&](long stop) {
      double worst = -kInf;
      for (long r = static_cast<long>(v); r != stop; r = static_cast<long>(tree.node(r).parent)) {
        worst = std::max(worst, tree.node(r).reward - sn.y[r] + s[r]);
        if (r == 0) break;
      }
      return worst - s[v];
    };
    const double a_next = sn.a[v] + sn.y[v] - sn.cont[v];
    switch (mode) {
      case PerturbationMode::feasible:
      case PerturbationMode::violate:
        if (lab.is_tau(v)) {
          hi = node.reward - sn.cont[v];
        } else {
          lo = segment_max(prev);
          if (prev >= 0) hi = tree.node(prev).reward - sn.cont[prev] + s[prev] - s[v];
        }
        break;
      case PerturbationMode::sure:
        if (lab.is_tau(v)) {
          hi = node.reward - sn.cont[v];
        } else {
          lo = hi = 0.0;
        }
        break;
      case PerturbationMode::weak0:
        if (first_tau[v] < 0) {
          lo = segment_max(-1);
        } else {
          hi = a_next + s[first_tau[v]] - s[v];
        }
        break;
      case PerturbationMode::sure0:
        if (first_tau[v] < 0) {
          lo = hi = 0.0;
        } else {
          hi = a_next - s[v];
        }
        break;
      case PerturbationMode::free:
        break;
    }

    std::vector<double> probs;
    for (auto c : node.children) probs.push_back(tree.node(c).prob);
    std::vector<double> zeta(node.children.size(), 0.0);

    if (mode == PerturbationMode::violate && v == target) {
      // One child lands outside the bounds, the others balance the mean.
      const auto k = rng.index(zeta.size());
      const double push = scale * rng.uniform(0.2, 1.0);
      const bool above = std::isfinite(hi) && (!std::isfinite(lo) || rng.uniform() < 0.5);
      zeta[k] = above ? hi + push : lo - push;
      const double rest = -probs[k] * zeta[k] / (1.0 - probs[k]);
      for (std::size_t c = 0; c < zeta.size(); ++c) {
        if (c != k) zeta[c] = rest;
      }
    } else {
      lo = std::max(lo, -scale);
      hi = std::min(hi, scale);
      if (lo <= 0.0 && hi >= 0.0 && rng.uniform() >= 0.25) {
        for (auto& z : zeta) z = rng.uniform(lo, hi);
        center(zeta, probs);
      }
    }
    for (std::size_t c = 0; c < zeta.size(); ++c) s[node.children[c]] = s[v] + zeta[c];
  }
  return s;
}

namespace {

double max_abs(const NodeValues& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

struct SweepState {
  SweepReport report;
  nlohmann::json trials = nlohmann::json::array();
  nlohmann::json findings = nlohmann::json::array();
  nlohmann::json controls = nlohmann::json::array();
};

void run_trial(const TreeLab& lab, const std::string& tree_id, const std::string& mode, const NodeValues& s,
               const NodeValues* partner, SweepState& st) {
  nlohmann::json t;
  std::vector<std::string> issues;
  t["tree"] = tree_id;
  t["mode"] = mode;
  t["s"] = s;
  const bool mart = lab.is_martingale(s);
  t["martingale"] = mart;

  const bool thm_main = lab.check_thm_main(s);
  const bool eqco = lab.check_cor_eqco(s);
  const auto [i0_weak, i0_sure] = lab.check_thm_i0(s);
  const auto [suff_weak, suff_sure] = lab.check_sufficient_i0(s);
  const bool alms = lab.check_cor_alms(s);
  t["predicates"] = {{"thm_main", thm_main},     {"cor_eqco", eqco},           {"thm_i0_weak", i0_weak},
                     {"thm_i0_sure", i0_sure},   {"sufficient_weak", suff_weak}, {"sufficient_sure", suff_sure},
                     {"cor_alms", alms}};

  if (!mart) {
    // Brute force must refuse non-martingales; every predicate must say no.
    bool rejected = false;
    try {
      lab.is_weakly_optimal_at(lab.shifted(s), 0);
    } catch (const ConfigError&) {
      rejected = true;
    }
    if (!rejected) issues.push_back("brute force accepted a non-martingale");
    if (thm_main || eqco || i0_weak || i0_sure || alms || suff_weak || suff_sure) {
      issues.push_back("a predicate accepted a non-martingale");
    }
  } else {
    const auto m = lab.shifted(s);
    const bool weak_all = lab.is_weakly_optimal(m);
    const bool sure_all = lab.is_surely_optimal(m);
    const bool weak0 = lab.is_weakly_optimal_at(m, 0);
    const bool sure0 = lab.is_surely_optimal_at(m, 0);
    t["brute_force"] = {{"weak_all", weak_all}, {"sure_all", sure_all}, {"weak0", weak0}, {"sure0", sure0}};

    if (thm_main != weak_all) issues.push_back("thm_main disagrees with brute-force optimality at all dates");
    if (eqco != thm_main) issues.push_back("increment conditions disagree with level conditions");
    if (i0_weak != weak0) issues.push_back("date-0 weak conditions disagree with brute force");
    if (i0_sure != sure0) issues.push_back("date-0 sure conditions disagree with brute force");
    if (alms != sure_all) issues.push_back("sure-optimality conditions disagree with brute force");
    if (suff_weak && !weak0) issues.push_back("sufficient weak conditions hold but M is not optimal at 0");
    if (suff_sure && !sure0) issues.push_back("sufficient sure conditions hold but M is not surely optimal at 0");
    if (weak0) {
      const bool at_tau = lab.pathwise_max_at_tau(m);
      t["pathwise_max_at_tau"] = at_tau;
      if (!at_tau) issues.push_back("optimal at 0 but the pathwise max is not attained at tau*");
    }
    if (partner && thm_main && lab.check_thm_main(*partner)) {
      NodeValues mid(s.size());
      for (std::size_t v = 0; v < s.size(); ++v) mid[v] = 0.5 * (s[v] + (*partner)[v]);
      const bool mid_ok = lab.check_thm_main(mid) && lab.is_weakly_optimal(lab.shifted(mid));
      t["midpoint_optimal"] = mid_ok;
      if (!mid_ok) issues.push_back("midpoint of two optimal perturbations is not optimal");
    }

    if (weak0) {
      const bool nonzero = max_abs(s) > kZeroTol;
      nlohmann::json rnd;
      struct Case {
        const char* name;
        XiLaw law;
        XiMode mode;
      };
      for (const Case c : {Case{"uniform_grid", XiLaw::uniform, XiMode::grid},
                           Case{"uniform_exact", XiLaw::uniform, XiMode::continuous},
                           Case{"texp_grid", XiLaw::texp, XiMode::grid},
                           Case{"texp_exact", XiLaw::texp, XiMode::continuous}}) {
        const auto r = lab.check_thm_opran(s, c.law, c.mode);
        rnd[c.name] = {{"gap", r.gap}, {"variance", r.variance}};
        if (!nonzero) {
          if (std::abs(r.gap) > kZeroTol || r.variance > kZeroTol) {
            issues.push_back(std::string("randomized Doob martingale not surely optimal (") + c.name + ")");
          }
          continue;
        }
        const bool strict = r.gap > kGapTol;
        const bool spread = r.variance > kZeroTol;
        if (strict && spread) continue;
        const std::string what = std::string(c.name) + ": gap " + format_double(r.gap) + ", variance " +
                                 format_double(r.variance) + " with S != 0";
        if (c.law == XiLaw::texp && c.mode == XiMode::continuous) {
          issues.push_back(what);
        } else {
          st.findings.push_back({{"tree", tree_id}, {"trial", st.report.trials}, {"note", what}});
          ++st.report.findings;
        }
      }
      t["randomized"] = rnd;
    }
  }

  t["issues"] = issues;
  t["ok"] = issues.empty();
  if (!issues.empty()) ++st.report.failures;
  ++st.report.trials;
  st.trials.push_back(std::move(t));
}

void sweep_tree(const TreeLab& lab, const std::string& id, const SweepOptions& options, SequentialRng& rng,
                SweepState& st) {
  static const PerturbationMode cycle[] = {
      PerturbationMode::feasible, PerturbationMode::feasible, PerturbationMode::sure,
      PerturbationMode::weak0,    PerturbationMode::sure0,    PerturbationMode::free,
      PerturbationMode::violate,  PerturbationMode::feasible, PerturbationMode::violate,
      PerturbationMode::free};
  run_trial(lab, id, "zero", NodeValues(lab.tree().node_count(), 0.0), nullptr, st);
  NodeValues last_feasible;
  for (std::size_t t = 0; t < options.perturbations_per_tree; ++t) {
    const auto mode = cycle[t % std::size(cycle)];
    const double scale = rng.uniform(0.1, 1.0);
    const auto s = random_perturbation(lab, rng, mode, scale);
    run_trial(lab, id, to_string(mode), s, last_feasible.empty() ? nullptr : &last_feasible, st);
    if (lab.check_thm_main(s)) last_feasible = s;
  }
}

void stylized_controls(SweepState& st) {
  auto scaled_doob = [](const TreeLab& lab, double alpha) {
    NodeValues s = lab.doob();
    for (auto& v : s) v *= 1.0 - alpha;
    return s;
  };
  const TreeLab three(stylized_three_point_tree());
  const TreeLab two(stylized_two_point_tree());
  struct Control {
    const TreeLab* lab;
    const char* tree;
    double alpha;
    bool weak0;
    bool sure0;
  };
  // The three-point tree has weakly optimal region [-4, 8/3]; the two-point tree [-4, 6].
  for (const Control c : {Control{&three, "stylized_three_point", 1.0, true, true},
                          Control{&three, "stylized_three_point", 2.0, true, false},
                          Control{&three, "stylized_three_point", 3.0, false, false},
                          Control{&three, "stylized_three_point", -4.5, false, false},
                          Control{&two, "stylized_two_point", 2.0, true, false},
                          Control{&two, "stylized_two_point", 5.0, true, false},
                          Control{&two, "stylized_two_point", 7.0, false, false}}) {
    const auto s = scaled_doob(*c.lab, c.alpha);
    const auto m = c.lab->shifted(s);
    const auto [i0w, i0s] = c.lab->check_thm_i0(s);
    const bool bw = c.lab->is_weakly_optimal_at(m, 0);
    const bool bs = c.lab->is_surely_optimal_at(m, 0);
    const bool ok = i0w == bw && i0s == bs && bw == c.weak0 && bs == c.sure0;
    st.controls.push_back({{"tree", c.tree},
                           {"alpha", c.alpha},
                           {"predicate", {i0w, i0s}},
                           {"brute_force", {bw, bs}},
                           {"expected", {c.weak0, c.sure0}},
                           {"ok", ok}});
    if (!ok) ++st.report.failures;
  }

  // Non-martingale control: a drift at the root.
  NodeValues drift(three.tree().node_count(), 0.0);
  for (auto c : three.tree().node(0).children) drift[c] = 0.1;
  bool rejected = false;
  try {
    three.is_weakly_optimal_at(three.shifted(drift), 0);
  } catch (const ConfigError&) {
    rejected = true;
  }
  const bool ok = rejected && !three.check_thm_main(drift) && !three.check_cor_eqco(drift);
  st.controls.push_back({{"tree", "stylized_three_point"}, {"control", "non-martingale S"}, {"ok", ok}});
  if (!ok) ++st.report.failures;
}

SweepReport finish(SweepState& st, const SweepOptions& options) {
  st.report.json = {{"seed", options.seed},
                    {"trials", st.report.trials},
                    {"failures", st.report.failures},
                    {"findings_count", st.report.findings},
                    {"passed", st.report.failures == 0},
                    {"controls", st.controls},
                    {"findings", st.findings},
                    {"results", st.trials}};
  return st.report;
}

}  // namespace

SweepReport run_sweep(const SweepOptions& options) {
  SweepState st;
  SequentialRng rng(options.seed);
  const RandomTreeOptions shapes[] = {{2, 2, false}, {3, 2, false}, {3, 3, false},
                                      {4, 2, false}, {4, 3, true},  {2, 3, true}};
  for (std::size_t i = 0; i < std::size(shapes); ++i) {
    const TreeLab lab(random_tree(rng, shapes[i]));
    const auto id = "random_" + std::to_string(i) + "_J" + std::to_string(shapes[i].horizon) + "_b" +
                    std::to_string(shapes[i].branching) + (shapes[i].recombining ? "_recombining" : "");
    sweep_tree(lab, id, options, rng, st);
  }
  if (options.include_stylized) {
    sweep_tree(TreeLab(stylized_three_point_tree()), "stylized_three_point", options, rng, st);
    stylized_controls(st);
  }
  return finish(st, options);
}

SweepReport run_tree_sweep(const TreeModel& tree, const SweepOptions& options) {
  SweepState st;
  SequentialRng rng(options.seed);
  sweep_tree(TreeLab(tree), "user_tree", options, rng, st);
  return finish(st, options);
}

}  // namespace dualstop
