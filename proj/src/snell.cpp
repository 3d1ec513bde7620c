#include "dualstop/snell.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dualstop/normal.hpp"

namespace dualstop {

namespace {

SnellData empty_snell(std::size_t n_paths, std::size_t horizon) {
  SnellData s;
  s.horizon = horizon;
  s.y = Table(n_paths, horizon + 1);
  s.m = Table(n_paths, horizon + 1);
  s.a = Table(n_paths, horizon + 1);
  s.cont = Table(n_paths, horizon + 1);
  s.tau_star.assign(n_paths, static_cast<int>(horizon));
  return s;
}

void fill_tau(const PathBundle& paths, SnellData& s) {
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    s.tau_star[n] = SegmentIndex(paths.z(n), s.cont.row(n)).first_tau();
  }
}

}  // namespace

TreeSnell backward_induct(const TreeModel& tree) {
  const auto count = tree.node_count();
  TreeSnell s;
  s.y.assign(count, 0.0);
  s.cont.assign(count, 0.0);
  s.m.assign(count, 0.0);
  s.a.assign(count, 0.0);
  for (std::size_t i = count; i-- > 0;) {
    const auto& node = tree.node(i);
    if (node.date == tree.horizon()) {
      s.y[i] = node.reward;
      continue;
    }
    CompensatedSum c;
    for (auto child : node.children) c.add(tree.node(child).prob * s.y[child]);
    s.cont[i] = c.value();
    s.y[i] = std::max(node.reward, s.cont[i]);
  }
  for (std::size_t i = 1; i < count; ++i) {
    const auto p = tree.node(i).parent;
    s.m[i] = s.m[p] + s.y[i] - s.cont[p];
    s.a[i] = s.a[p] + s.y[p] - s.cont[p];
  }
  return s;
}

SnellData snell_on_paths(const TreeModel& tree, const TreeSnell& snell, const PathBundle& bundle) {
  if (bundle.kind != ModelKind::tree || bundle.nodes.size() != bundle.n_paths()) {
    throw ConfigError("snell_on_paths: bundle does not come from a tree");
  }
  auto s = empty_snell(bundle.n_paths(), tree.horizon());
  s.y0 = snell.y0();
  for (std::size_t n = 0; n < bundle.n_paths(); ++n) {
    for (std::size_t j = 0; j <= tree.horizon(); ++j) {
      const auto node = bundle.nodes[n][j];
      s.y(n, j) = snell.y[node];
      s.m(n, j) = snell.m[node];
      s.a(n, j) = snell.a[node];
      s.cont(n, j) = snell.cont[node];
    }
  }
  fill_tau(bundle, s);
  return s;
}

SnellData stylized_snell(const PathBundle& paths) {
  if (paths.kind != ModelKind::stylized) throw ConfigError("stylized_snell: paths are not from the stylized model");
  auto s = empty_snell(paths.n_paths(), 2);
  s.y0 = 1.25;
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    const double u = paths.drivers(n, 0);
    const double y1 = std::max(u, 1.0);
    s.y(n, 0) = 1.25;
    s.y(n, 1) = y1;
    s.y(n, 2) = 1.0;
    s.cont(n, 0) = 1.25;
    s.cont(n, 1) = 1.0;
    s.m(n, 1) = y1 - 1.25;
    s.m(n, 2) = y1 - 1.25;
    s.a(n, 2) = y1 - 1.0;
    s.tau_star[n] = u >= 1.0 ? 1 : 2;
  }
  return s;
}

double black_continuation(const BermudanCallModel& model, double w1) {
  if (!(model.sigma2 > 0.0)) throw ConfigError("black_continuation: sigma2 must be positive");
  const double sigma = model.sigma();
  const double s1 = model.stock(1, w1);
  if (model.kappa2 <= 0.0) return s1;
  const double d1 = w1 + std::log(model.s0 / model.kappa2) / sigma;
  return std::max(0.0, s1 * normal_cdf(d1) - model.kappa2 * normal_cdf(d1 - sigma));
}

QuadratureResult bermudan_value(const BermudanCallModel& model, double abs_tol) {
  model.validate();
  auto integrand = [&](double z) {
    const double exercise = std::max(model.stock(1, z) - model.kappa1, 0.0);
    return std::max(exercise, black_continuation(model, z)) * normal_pdf(z);
  };
  QuadratureResult r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -10.0, 10.0, 20, 1e-13,
                                                                          &r.error);
  if (!(r.error <= abs_tol)) {
    throw NumericalError("bermudan_value: quadrature reached error estimate " + format_double(r.error) +
                         " above tolerance " + format_double(abs_tol));
  }
  return r;
}

SnellData bermudan_snell(const BermudanCallModel& model, const PathBundle& paths, double y0) {
  if (paths.kind != ModelKind::bermudan) throw ConfigError("bermudan_snell: paths are not from the Bermudan model");
  auto s = empty_snell(paths.n_paths(), 2);
  s.y0 = y0;
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    const double c1 = black_continuation(model, paths.drivers(n, 0));
    const double z1 = paths.rewards(n, 1);
    const double z2 = paths.rewards(n, 2);
    const double y1 = std::max(z1, c1);
    s.y(n, 0) = std::max(paths.rewards(n, 0), y0);
    s.y(n, 1) = y1;
    s.y(n, 2) = z2;
    s.cont(n, 0) = y0;
    s.cont(n, 1) = c1;
    s.m(n, 1) = y1 - y0;
    s.m(n, 2) = y1 - y0 + z2 - c1;
    s.a(n, 1) = s.y(n, 0) - y0;
    s.a(n, 2) = s.a(n, 1) + y1 - c1;
  }
  fill_tau(paths, s);
  return s;
}

std::pair<double, SnellData> bs_value_and_snell(const BermudanCallModel& model, const PathBundle& paths) {
  const double y0 = bermudan_value(model).value;
  return {y0, bermudan_snell(model, paths, y0)};
}

SegmentIndex::SegmentIndex(std::span<const double> z, std::span<const double> cont) {
  const auto last = z.size() - 1;
  label_.resize(z.size());
  int label = 1;
  for (std::size_t i = 0; i <= last; ++i) {
    label_[i] = label;
    if (i == last || z[i] >= cont[i] - kExerciseTol) {
      tau_.push_back(static_cast<int>(i));
      ++label;
    }
  }
}

std::vector<SegmentIndex> stopping_family(const PathBundle& paths, const SnellData& snell) {
  std::vector<SegmentIndex> out;
  out.reserve(paths.n_paths());
  for (std::size_t n = 0; n < paths.n_paths(); ++n) out.emplace_back(paths.z(n), snell.cont.row(n));
  return out;
}

void write_snell_csv(std::ostream& out, const PathBundle& paths, const SnellData& snell) {
  const auto J = snell.horizon;
  out << "path";
  if (paths.kind == ModelKind::stylized) out << ",U";
  if (paths.kind == ModelKind::bermudan) out << ",W1,W12";
  for (const char* name : {"Z", "Y", "M", "A"}) {
    for (std::size_t j = 0; j <= J; ++j) out << ',' << name << j;
  }
  out << ",tau\n";
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    out << n;
    for (std::size_t d = 0; d < paths.drivers.cols(); ++d) out << ',' << format_double(paths.drivers(n, d));
    for (const Table* t : {&paths.rewards, &snell.y, &snell.m, &snell.a}) {
      for (std::size_t j = 0; j <= J; ++j) out << ',' << format_double((*t)(n, j));
    }
    out << ',' << snell.tau_star[n] << '\n';
  }
}

SnellData snell_for(const PathBundle& paths, const TreeModel* tree) {
  switch (paths.kind) {
    case ModelKind::stylized:
      return stylized_snell(paths);
    case ModelKind::bermudan:
      if (!paths.bermudan) throw ConfigError("snell_for: Bermudan bundle lacks model parameters");
      return bs_value_and_snell(*paths.bermudan, paths).second;
    case ModelKind::tree:
      if (tree == nullptr) throw ConfigError("snell_for: tree bundle needs its TreeModel");
      return snell_on_paths(*tree, backward_induct(*tree), paths);
  }
  throw ConfigError("snell_for: unknown model kind");
}

}  // namespace dualstop
