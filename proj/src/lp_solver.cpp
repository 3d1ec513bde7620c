#include "dualstop/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

namespace dualstop {

LPProblem build_lp(const PathBundle& paths, const BasisMatrix& basis, const Table& eta) {
  if (paths.n_paths() == 0) throw ConfigError("build_lp: no paths");
  if (basis.n_paths() != paths.n_paths() || basis.horizon() != paths.horizon) {
    throw ConfigError("build_lp: basis does not match the paths");
  }
  LPProblem lp;
  lp.n_paths = paths.n_paths();
  lp.n_dates = paths.horizon + 1;
  lp.n_alpha = basis.dim();
  lp.c = paths.rewards;
  if (!eta.empty()) {
    if (eta.rows() != lp.n_paths || eta.cols() != lp.n_dates) throw ConfigError("build_lp: eta has the wrong shape");
    for (std::size_t i = 0; i < lp.c.data().size(); ++i) lp.c.data()[i] += eta.data()[i];
  }
  lp.b.reserve(lp.n_rows() * lp.n_alpha);
  for (std::size_t n = 0; n < lp.n_paths; ++n) {
    for (std::size_t j = 0; j < lp.n_dates; ++j) {
      const auto v = basis.at(n, j);
      lp.b.insert(lp.b.end(), v.begin(), v.end());
    }
  }
  if (paths.weighted()) lp.weights = paths.weights;
  return lp;
}

LPProblem build_lp(const PathBundle& paths, const BasisMatrix& basis, const RandomizerSpec& spec,
                   const SnellData* snell, std::uint64_t seed) {
  return build_lp(paths, basis, make_eta(spec, paths, snell, seed));
}

void dump_lp(std::ostream& out, const LPProblem& lp) {
  out << "# minimize sum_n w_n u_n\n";
  out << "paths " << lp.n_paths << "\ndates " << lp.n_dates << "\nalpha " << lp.n_alpha << '\n';
  for (std::size_t n = 0; n < lp.weights.size(); ++n) out << "weight " << n << ' ' << format_double(lp.weights[n]) << '\n';
  for (std::size_t n = 0; n < lp.n_paths; ++n) {
    for (std::size_t j = 0; j < lp.n_dates; ++j) {
      out << "u_" << n << " >= " << format_double(lp.c(n, j));
      if (lp.n_alpha > 0) {
        out << " - (";
        const auto b = lp.coef(n, j);
        for (std::size_t k = 0; k < lp.n_alpha; ++k) {
          out << (k ? " + " : "") << format_double(b[k]) << "*a_" << k;
        }
        out << ')';
      }
      out << '\n';
    }
  }
}

namespace {

class RowReader {
 public:
  RowReader(const std::string& line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("load_lp: line " + std::to_string(line_no_) + ": " + what);
  }
  void skip_space() {
    while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
  }
  void expect(const std::string& token) {
    skip_space();
    if (line_.compare(pos_, token.size(), token) != 0) fail("expected '" + token + "'");
    pos_ += token.size();
  }
  bool peek(char c) {
    skip_space();
    return pos_ < line_.size() && line_[pos_] == c;
  }
  double number() {
    skip_space();
    const char* start = line_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - start);
    return v;
  }
  std::size_t index() {
    const double v = number();
    if (v < 0 || v != std::floor(v)) fail("expected an index");
    return static_cast<std::size_t>(v);
  }
  bool done() {
    skip_space();
    return pos_ == line_.size();
  }

 private:
  const std::string& line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

}  // namespace

LPProblem load_lp(std::istream& in) {
  LPProblem lp;
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  bool sized = false;
  auto size_up = [&] {
    if (sized) return;
    if (lp.n_paths == 0 || lp.n_dates == 0) throw ConfigError("load_lp: rows before the paths/dates header");
    lp.c = Table(lp.n_paths, lp.n_dates);
    lp.b.assign(lp.n_rows() * lp.n_alpha, 0.0);
    sized = true;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream words(line);
    std::string head;
    words >> head;
    if (head == "paths") {
      words >> lp.n_paths;
    } else if (head == "dates") {
      words >> lp.n_dates;
    } else if (head == "alpha") {
      words >> lp.n_alpha;
    } else if (head == "weight") {
      size_up();
      std::size_t n = 0;
      double w = 0.0;
      words >> n >> w;
      if (!words || n >= lp.n_paths) throw ConfigError("load_lp: line " + std::to_string(line_no) + ": bad weight");
      lp.weights.resize(lp.n_paths, 0.0);
      lp.weights[n] = w;
    } else if (head.rfind("u_", 0) == 0) {
      size_up();
      RowReader r(line, line_no);
      r.expect("u_");
      const auto n = r.index();
      if (rows >= lp.n_rows()) r.fail("more rows than paths x dates");
      const auto j = rows % lp.n_dates;
      if (n != rows / lp.n_dates) r.fail("rows must be ordered by path, then date");
      r.expect(">=");
      lp.c(n, j) = r.number();
      if (lp.n_alpha > 0) {
        r.expect("-");
        r.expect("(");
        for (std::size_t k = 0; k < lp.n_alpha; ++k) {
          if (k) r.expect("+");
          lp.b[(n * lp.n_dates + j) * lp.n_alpha + k] = r.number();
          r.expect("*a_");
          if (r.index() != k) r.fail("coefficients must list a_0, a_1, ... in order");
        }
        r.expect(")");
      }
      if (!r.done()) r.fail("trailing characters");
      ++rows;
    } else {
      throw ConfigError("load_lp: line " + std::to_string(line_no) + ": unknown entry '" + head + "'");
    }
    if (words.fail() && head != "weight" && head.rfind("u_", 0) != 0) {
      throw ConfigError("load_lp: line " + std::to_string(line_no) + ": bad header value");
    }
  }
  size_up();
  if (rows != lp.n_rows()) {
    throw ConfigError("load_lp: expected " + std::to_string(lp.n_rows()) + " rows, read " + std::to_string(rows));
  }
  return lp;
}

std::string to_string(LPStatus status) {
  switch (status) {
    case LPStatus::optimal:
      return "optimal";
    case LPStatus::unbounded:
      return "unbounded";
    case LPStatus::iteration_limit:
      return "iteration-limit";
  }
  return "?";
}

namespace {

// Dual simplex on the dual of the epigraph LP:
//
//   minimize   sum_q g_q v_q,  g_q = -c_q,  q = (n, j)
//   subject to sum_j v_{n,j} = r_n          (one convexity row per path)
//              sum_q v_q b_q = 0            (one coupling row per alpha)
//              v >= 0
//
// with r_n = N w_n. Its row duals are y_n = -u_n and pi = -alpha. Every basis holds one
// "key" column per path; the remaining K basic columns (real or artificial, the
// artificials fixed at zero) enter a K x K working matrix W whose columns are
// b_q - b_key(n), so each iteration costs one small LU plus a pass over the rows.
class GubDualSimplex {
 public:
  GubDualSimplex(const LPProblem& lp, const LPOptions& opt)
      : lp_(lp), opt_(opt), N_(lp.n_paths), D_(lp.n_dates), K_(lp.n_alpha) {
    r_.resize(N_);
    for (std::size_t n = 0; n < N_; ++n) r_[n] = static_cast<double>(N_) * lp.weight(n);
    key_.resize(N_);
    state_.assign(N_ * D_, kNonbasic);
    for (std::size_t n = 0; n < N_; ++n) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < D_; ++j) {
        if (lp.c(n, j) > lp.c(n, best)) best = j;
      }
      key_[n] = best;
      state_[n * D_ + best] = kKey;
    }
    for (std::size_t k = 0; k < K_; ++k) slots_.push_back({true, k});
  }

  LPSolution run() {
    LPSolution sol;
    const std::size_t rows = N_ * D_;
    const std::size_t limit = opt_.max_iterations ? opt_.max_iterations : 50 * (rows + K_) + 1000;
    double best_obj = -std::numeric_limits<double>::infinity();
    std::size_t stalled = 0;
    bool bland = false;

    for (std::size_t it = 0;; ++it) {
      factor();
      solve_primal();
      solve_dual();
      const double obj = dual_objective();
      if (obj > best_obj + 1e-12 * (1.0 + std::abs(best_obj))) {
        best_obj = obj;
        stalled = 0;
      } else if (++stalled > 5 * rows) {
        bland = true;
      }

      const auto leave = choose_leaving(bland);
      if (!leave) {
        sol.status = LPStatus::optimal;
        sol.iterations = it;
        break;
      }
      if (it >= limit) {
        sol.status = LPStatus::iteration_limit;
        sol.iterations = it;
        break;
      }
      compute_row(*leave);
      const auto enter = choose_entering(*leave, bland);
      if (!enter) {
        sol.status = LPStatus::unbounded;
        sol.iterations = it;
        break;
      }
      pivot(*leave, *enter);
    }
    sol.bland = bland;
    sol.alpha_hat.resize(K_);
    for (std::size_t k = 0; k < K_; ++k) sol.alpha_hat[k] = -pi_(static_cast<Eigen::Index>(k));
    sol.u.resize(N_);
    CompensatedSum total;
    for (std::size_t n = 0; n < N_; ++n) {
      double u = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < D_; ++j) {
        const auto b = lp_.coef(n, j);
        double s = 0.0;
        for (std::size_t k = 0; k < K_; ++k) s += sol.alpha_hat[k] * b[k];
        u = std::max(u, lp_.c(n, j) - s);
      }
      sol.u[n] = u;
      total.add(lp_.weight(n) * u);
    }
    sol.objective_value = total.value();
    return sol;
  }

 private:
  static constexpr char kNonbasic = 0;
  static constexpr char kKey = 1;
  static constexpr char kSlot = 2;

  struct Slot {
    bool artificial;
    std::size_t index;  // alpha index for artificials, column q otherwise
  };

  // A basic variable: a path key or a working-basis slot.
  struct Leaving {
    bool is_key;
    std::size_t where;  // path for keys, slot position otherwise
    bool above;         // artificial above its upper bound 0
  };

  std::size_t path_of(std::size_t q) const { return q / D_; }
  std::size_t key_col(std::size_t n) const { return n * D_ + key_[n]; }
  double g(std::size_t q) const { return -lp_.c.data()[q]; }
  std::span<const double> b(std::size_t q) const { return {lp_.b.data() + q * K_, K_}; }
  double dot(const Eigen::VectorXd& v, std::span<const double> w) const {
    double s = 0.0;
    for (std::size_t k = 0; k < K_; ++k) s += v(static_cast<Eigen::Index>(k)) * w[k];
    return s;
  }
  std::size_t global_index(const Slot& s) const { return s.artificial ? N_ * D_ + s.index : s.index; }

  void factor() {
    if (K_ == 0) return;
    const auto K = static_cast<Eigen::Index>(K_);
    w_.setZero(K, K);
    for (std::size_t s = 0; s < K_; ++s) {
      const auto col = static_cast<Eigen::Index>(s);
      if (slots_[s].artificial) {
        w_(static_cast<Eigen::Index>(slots_[s].index), col) = 1.0;
        continue;
      }
      const auto q = slots_[s].index;
      const auto bq = b(q);
      const auto bk = b(key_col(path_of(q)));
      for (std::size_t k = 0; k < K_; ++k) w_(static_cast<Eigen::Index>(k), col) = bq[k] - bk[k];
    }
    lu_.compute(w_);
  }

  void solve_primal() {
    const auto K = static_cast<Eigen::Index>(K_);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
    for (std::size_t n = 0; n < N_; ++n) {
      const auto bk = b(key_col(n));
      for (std::size_t k = 0; k < K_; ++k) rhs(static_cast<Eigen::Index>(k)) -= r_[n] * bk[k];
    }
    x_slot_ = K_ ? Eigen::VectorXd(lu_.solve(rhs)) : Eigen::VectorXd();
    x_key_ = r_;
    for (std::size_t s = 0; s < K_; ++s) {
      if (!slots_[s].artificial) x_key_[path_of(slots_[s].index)] -= x_slot_(static_cast<Eigen::Index>(s));
    }
  }

  void solve_dual() {
    const auto K = static_cast<Eigen::Index>(K_);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(K);
    for (std::size_t s = 0; s < K_; ++s) {
      if (slots_[s].artificial) continue;
      const auto q = slots_[s].index;
      h(static_cast<Eigen::Index>(s)) = g(q) - g(key_col(path_of(q)));
    }
    pi_ = K_ ? Eigen::VectorXd(lu_.transpose().solve(h)) : Eigen::VectorXd::Zero(0);
    y_.resize(N_);
    for (std::size_t n = 0; n < N_; ++n) y_[n] = g(key_col(n)) - dot(pi_, b(key_col(n)));
  }

  double dual_objective() const {
    CompensatedSum s;
    for (std::size_t n = 0; n < N_; ++n) s.add(r_[n] * y_[n]);
    return s.value();
  }

  std::optional<Leaving> choose_leaving(bool bland) const {
    std::optional<Leaving> best;
    double worst = 0.0;
    std::size_t best_index = std::numeric_limits<std::size_t>::max();
    auto consider = [&](Leaving cand, double infeasibility, std::size_t index) {
      if (infeasibility <= opt_.feasibility_tol) return;
      const bool better = bland ? index < best_index
                                : (infeasibility > worst || (infeasibility == worst && index < best_index));
      if (!best || better) {
        best = cand;
        worst = infeasibility;
        best_index = index;
      }
    };
    for (std::size_t n = 0; n < N_; ++n) consider({true, n, false}, -x_key_[n], key_col(n));
    for (std::size_t s = 0; s < K_; ++s) {
      const double x = x_slot_(static_cast<Eigen::Index>(s));
      if (slots_[s].artificial) {
        consider({false, s, x > 0.0}, std::abs(x), global_index(slots_[s]));
      } else {
        consider({false, s, false}, -x, global_index(slots_[s]));
      }
    }
    return best;
  }

  // Row of B^{-1} A belonging to the leaving variable, restricted to what the ratio test needs.
  void compute_row(const Leaving& leave) {
    const auto K = static_cast<Eigen::Index>(K_);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(K);
    for (std::size_t s = 0; s < K_; ++s) {
      double v = (!leave.is_key && leave.where == s) ? 1.0 : 0.0;
      if (leave.is_key && !slots_[s].artificial && path_of(slots_[s].index) == leave.where) v -= 1.0;
      e(static_cast<Eigen::Index>(s)) = v;
    }
    rho_pi_ = K_ ? Eigen::VectorXd(lu_.transpose().solve(e)) : Eigen::VectorXd::Zero(0);
    rho_y_.resize(N_);
    for (std::size_t n = 0; n < N_; ++n) {
      rho_y_[n] = ((leave.is_key && leave.where == n) ? 1.0 : 0.0) - dot(rho_pi_, b(key_col(n)));
    }
  }

  std::optional<std::size_t> choose_entering(const Leaving& leave, bool bland) const {
    std::optional<std::size_t> best;
    double best_ratio = std::numeric_limits<double>::infinity();
    double best_pivot = 0.0;
    for (std::size_t q = 0; q < N_ * D_; ++q) {
      if (state_[q] != kNonbasic) continue;
      const auto n = path_of(q);
      const auto bq = b(q);
      const double alpha = rho_y_[n] + dot(rho_pi_, bq);
      const double a = leave.above ? alpha : -alpha;
      if (a <= opt_.pivot_tol) continue;
      const double d = std::max(0.0, g(q) - y_[n] - dot(pi_, bq));
      const double ratio = d / a;
      const double tie = 1e-12 * std::max(1.0, best_ratio);
      bool take = false;
      if (!best || ratio < best_ratio - tie) {
        take = true;
      } else if (ratio <= best_ratio + tie) {
        take = bland ? false : a > best_pivot;
      }
      if (take) {
        best = q;
        best_ratio = std::min(ratio, best_ratio);
        best_pivot = a;
      }
    }
    return best;
  }

  void pivot(const Leaving& leave, std::size_t q) {
    const auto n_q = path_of(q);
    if (!leave.is_key) {
      const auto& old = slots_[leave.where];
      if (!old.artificial) state_[old.index] = kNonbasic;
      slots_[leave.where] = {false, q};
      state_[q] = kSlot;
      return;
    }
    const auto p = leave.where;
    state_[key_col(p)] = kNonbasic;
    if (n_q == p) {
      key_[p] = q % D_;
      state_[q] = kKey;
      return;
    }
    // Another basic column of path p takes over as key; q fills its slot.
    for (std::size_t s = 0; s < K_; ++s) {
      if (slots_[s].artificial || path_of(slots_[s].index) != p) continue;
      key_[p] = slots_[s].index % D_;
      state_[slots_[s].index] = kKey;
      slots_[s] = {false, q};
      state_[q] = kSlot;
      return;
    }
    throw NumericalError("solve_lp: pivot left a path without a basic column");
  }

  const LPProblem& lp_;
  LPOptions opt_;
  std::size_t N_, D_, K_;
  std::vector<double> r_;
  std::vector<std::size_t> key_;
  std::vector<char> state_;
  std::vector<Slot> slots_;

  Eigen::MatrixXd w_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd x_slot_, pi_, rho_pi_;
  std::vector<double> x_key_, y_, rho_y_;
};

}  // namespace

LPSolution solve_lp(const LPProblem& lp, const LPOptions& options) {
  if (lp.n_paths == 0 || lp.n_dates == 0) throw ConfigError("solve_lp: empty problem");
  if (lp.c.rows() != lp.n_paths || lp.c.cols() != lp.n_dates || lp.b.size() != lp.n_rows() * lp.n_alpha) {
    throw ConfigError("solve_lp: inconsistent problem dimensions");
  }
  return GubDualSimplex(lp, options).run();
}

MinimizeResult minimize(const PathBundle& paths, const BasisMatrix& basis, const RandomizerSpec& spec,
                        const SnellData* snell, std::uint64_t seed, const PathBundle* test_paths,
                        const BasisMatrix* test_basis, const LPOptions& options) {
  const Table eta = make_eta(spec, paths, snell, seed);
  const auto lp = build_lp(paths, basis, eta);
  MinimizeResult out;
  out.lp = solve_lp(lp, options);
  const Table m = eval_family(basis, out.lp.alpha_hat);
  out.in_sample = estimate_values(paths, m, eta);
  out.in_sample_raw = estimate_values(paths, m, Table());
  if (test_paths) {
    if (!test_basis) throw ConfigError("minimize: test paths need their own basis");
    out.test = estimate_values(*test_paths, eval_family(*test_basis, out.lp.alpha_hat), Table());
  }
  return out;
}

}  // namespace dualstop
