#include "dualstop/martingale_families.hpp"

#include <fstream>
#include <ostream>

namespace dualstop {

namespace {

void require_bermudan(const PathBundle& paths, const char* who) {
  if (paths.kind != ModelKind::bermudan || paths.drivers.cols() != 2) {
    throw ConfigError(std::string(who) + ": needs Bermudan-call paths (drivers W1, W12)");
  }
}

void require_snell(const PathBundle& paths, const SnellData& snell, const char* who) {
  if (snell.n_paths() != paths.n_paths() || snell.horizon != paths.horizon) {
    throw ConfigError(std::string(who) + ": Snell data does not match the paths");
  }
}

}  // namespace

double BasisMatrix::combine(std::size_t n, std::size_t j, std::span<const double> alpha) const {
  const auto b = at(n, j);
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) s += alpha[k] * b[k];
  return s;
}

double hermite(int k, double x) {
  if (k < 0) throw ConfigError("hermite: degree must be nonnegative");
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int i = 1; i < k; ++i) {
    const double next = x * cur - i * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

BasisMatrix build_doob_basis(const SnellData& snell) {
  BasisMatrix b(FamilyKind::doob_scalar, snell.n_paths(), snell.horizon, 1);
  for (std::size_t n = 0; n < snell.n_paths(); ++n) {
    for (std::size_t j = 0; j <= snell.horizon; ++j) b(n, j, 0) = snell.m(n, j);
  }
  return b;
}

BasisMatrix build_stylized_basis(const PathBundle& paths, const SnellData& snell) {
  require_bermudan(paths, "msty family");
  require_snell(paths, snell, "msty family");
  BasisMatrix b(FamilyKind::msty, paths.n_paths(), 2, 4);
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    const double w1 = paths.drivers(n, 0);
    const double w12 = paths.drivers(n, 1);
    const double c1 = snell.cont(n, 1);
    const double b1 = snell.y(n, 1) - snell.y0 - w1;
    for (std::size_t j = 1; j <= 2; ++j) {
      b(n, j, 0) = b1;
      b(n, j, 1) = w1;
    }
    b(n, 2, 2) = paths.rewards(n, 2) - c1 - w12;
    b(n, 2, 3) = w12;
  }
  return b;
}

BasisMatrix build_hermite_basis(const PathBundle& paths, const HermiteSpec& spec) {
  require_bermudan(paths, "hermite family");
  if (spec.k < 1 || spec.l < 1) throw ConfigError("hermite family: K and L must be at least 1");
  const auto K = static_cast<std::size_t>(spec.k);
  const auto L = static_cast<std::size_t>(spec.l);
  BasisMatrix b(FamilyKind::hermite, paths.n_paths(), 2, K + (K + 1) * L);
  std::vector<double> h1(K + 1), h12(L + 1);
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    for (std::size_t k = 0; k <= K; ++k) h1[k] = hermite(static_cast<int>(k), paths.drivers(n, 0));
    for (std::size_t l = 0; l <= L; ++l) h12[l] = hermite(static_cast<int>(l), paths.drivers(n, 1));
    for (std::size_t k = 1; k <= K; ++k) {
      b(n, 1, k - 1) = h1[k];
      b(n, 2, k - 1) = h1[k];
    }
    std::size_t col = K;
    for (std::size_t k = 0; k <= K; ++k) {
      for (std::size_t l = 1; l <= L; ++l) b(n, 2, col++) = h1[k] * h12[l];
    }
  }
  return b;
}

CustomFamily CustomFamily::from_json(const nlohmann::json& j) {
  if (!j.contains("columns") || !j.at("columns").is_array() || j.at("columns").empty()) {
    throw ConfigError("custom family: expected a nonempty \"columns\" array");
  }
  CustomFamily f;
  for (const auto& col : j.at("columns")) {
    if (!col.is_object()) throw ConfigError("custom family: each column maps dates to increment expressions");
    auto& parsed = f.columns.emplace_back();
    for (const auto& [date, expr] : col.items()) {
      std::size_t d = 0;
      try {
        d = std::stoul(date);
      } catch (const std::exception&) {
        throw ConfigError("custom family: bad date key '" + date + "'");
      }
      if (d == 0) throw ConfigError("custom family: increments start at date 1 (M_0 = 0)");
      parsed.emplace(d, Expression::parse(expr.get<std::string>()));
    }
  }
  return f;
}

CustomFamily CustomFamily::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("custom family: cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("custom family: " + file.string() + ": " + e.what());
  }
  return from_json(j);
}

std::vector<std::string> custom_variables(const PathBundle& paths, bool with_snell) {
  std::vector<std::string> names;
  if (paths.kind == ModelKind::stylized) names.push_back("U");
  if (paths.kind == ModelKind::bermudan) names.insert(names.end(), {"W1", "W12"});
  std::vector<const char*> prefixes{"Z"};
  if (with_snell) prefixes.insert(prefixes.end(), {"Y", "C", "M", "A"});
  for (const char* p : prefixes) {
    for (std::size_t j = 0; j <= paths.horizon; ++j) names.push_back(p + std::to_string(j));
  }
  return names;
}

BasisMatrix build_custom_basis(const PathBundle& paths, const SnellData* snell, CustomFamily family) {
  if (snell) require_snell(paths, *snell, "custom family");
  const auto names = custom_variables(paths, snell != nullptr);
  for (auto& col : family.columns) {
    for (auto& [date, expr] : col) {
      if (date > paths.horizon) {
        throw ConfigError("custom family: date " + std::to_string(date) + " beyond horizon " +
                          std::to_string(paths.horizon));
      }
      expr.bind(names);
    }
  }
  const auto J = paths.horizon;
  BasisMatrix b(FamilyKind::custom, paths.n_paths(), J, family.columns.size());
  std::vector<double> slots(names.size());
  for (std::size_t n = 0; n < paths.n_paths(); ++n) {
    std::size_t s = 0;
    for (std::size_t d = 0; d < paths.drivers.cols(); ++d) slots[s++] = paths.drivers(n, d);
    for (std::size_t j = 0; j <= J; ++j) slots[s++] = paths.rewards(n, j);
    if (snell) {
      for (const Table* t : {&snell->y, &snell->cont, &snell->m, &snell->a}) {
        for (std::size_t j = 0; j <= J; ++j) slots[s++] = (*t)(n, j);
      }
    }
    for (std::size_t k = 0; k < family.columns.size(); ++k) {
      double level = 0.0;
      for (std::size_t j = 1; j <= J; ++j) {
        const auto it = family.columns[k].find(j);
        if (it != family.columns[k].end()) level += it->second.eval(slots);
        b(n, j, k) = level;
      }
    }
  }
  return b;
}

Table eval_family(const BasisMatrix& basis, std::span<const double> alpha) {
  if (alpha.size() != basis.dim()) {
    throw ConfigError("eval_family: alpha has " + std::to_string(alpha.size()) + " entries, family has " +
                      std::to_string(basis.dim()));
  }
  Table m(basis.n_paths(), basis.horizon() + 1);
  for (std::size_t n = 0; n < basis.n_paths(); ++n) {
    for (std::size_t j = 1; j <= basis.horizon(); ++j) m(n, j) = basis.combine(n, j, alpha);
  }
  return m;
}

FamilySpec FamilySpec::from_json(const nlohmann::json& j) {
  FamilySpec f;
  const auto kind = j.is_string() ? j.get<std::string>() : j.value("kind", std::string{});
  if (kind == "single_doob_scalar") {
    f.kind = FamilyKind::doob_scalar;
  } else if (kind == "msty") {
    f.kind = FamilyKind::msty;
  } else if (kind == "hermite") {
    f.kind = FamilyKind::hermite;
    if (j.is_object()) {
      f.hermite.k = j.value("K", 3);
      f.hermite.l = j.value("L", 3);
    }
  } else if (kind == "custom") {
    f.kind = FamilyKind::custom;
    if (!j.is_object() || !j.contains("file")) throw ConfigError("family: custom needs a \"file\"");
    f.custom_file = j.at("file").get<std::string>();
  } else {
    throw ConfigError("family: unknown kind '" + kind + "' (single_doob_scalar | msty | hermite | custom)");
  }
  return f;
}

std::string FamilySpec::name() const {
  switch (kind) {
    case FamilyKind::doob_scalar:
      return "single_doob_scalar";
    case FamilyKind::msty:
      return "msty";
    case FamilyKind::hermite:
      return "hermite(" + std::to_string(hermite.k) + "," + std::to_string(hermite.l) + ")";
    case FamilyKind::custom:
      return "custom";
  }
  return "?";
}

BasisMatrix build_basis(const FamilySpec& spec, const PathBundle& paths, const SnellData* snell) {
  switch (spec.kind) {
    case FamilyKind::doob_scalar:
      if (!snell) throw ConfigError("single_doob_scalar family needs Snell data");
      return build_doob_basis(*snell);
    case FamilyKind::msty:
      if (!snell) throw ConfigError("msty family needs Snell data");
      return build_stylized_basis(paths, *snell);
    case FamilyKind::hermite:
      return build_hermite_basis(paths, spec.hermite);
    case FamilyKind::custom:
      return build_custom_basis(paths, snell, CustomFamily::load(spec.custom_file));
  }
  throw ConfigError("family: unknown kind");
}

void write_basis_csv(std::ostream& out, const BasisMatrix& basis) {
  out << "path";
  for (std::size_t j = 0; j <= basis.horizon(); ++j) {
    for (std::size_t k = 0; k < basis.dim(); ++k) out << ",B" << j << '_' << k + 1;
  }
  out << '\n';
  for (std::size_t n = 0; n < basis.n_paths(); ++n) {
    out << n;
    for (std::size_t j = 0; j <= basis.horizon(); ++j) {
      for (double v : basis.at(n, j)) out << ',' << format_double(v);
    }
    out << '\n';
  }
}

}  // namespace dualstop
