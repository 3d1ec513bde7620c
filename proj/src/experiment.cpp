#include "dualstop/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "dualstop/snell.hpp"

namespace dualstop {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> GridAxis::points() const {
  if (!(step > 0.0) || !std::isfinite(from) || !std::isfinite(to) || to < from) {
    throw ConfigError("profile axis: need finite from <= to and step > 0");
  }
  const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  if (count > 1'000'000) throw ConfigError("profile axis: more than 10^6 points");
  std::vector<double> pts(count);
  for (std::size_t i = 0; i < count; ++i) pts[i] = from + static_cast<double>(i) * step;
  return pts;
}

std::vector<std::vector<double>> ProfileSpec::alpha_grid(std::size_t dim) const {
  if (axes.empty()) throw ConfigError("profile: no axes");
  std::vector<int> map = assign;
  if (map.empty()) {
    if (axes.size() != dim) {
      throw ConfigError("profile: " + std::to_string(axes.size()) + " axes for " + std::to_string(dim) +
                        " parameters; give \"assign\" to map axes to parameters");
    }
    for (std::size_t k = 0; k < dim; ++k) map.push_back(static_cast<int>(k));
  }
  if (map.size() != dim) throw ConfigError("profile: \"assign\" needs one entry per family parameter");
  for (int a : map) {
    if (a < -1 || a >= static_cast<int>(axes.size())) throw ConfigError("profile: \"assign\" entry out of range");
  }
  std::vector<double> start = base.empty() ? std::vector<double>(dim, 0.0) : base;
  if (start.size() != dim) throw ConfigError("profile: \"base\" needs one entry per family parameter");

  std::vector<std::vector<double>> pts;
  for (const auto& ax : axes) pts.push_back(ax.points());
  std::vector<std::vector<double>> grid;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    auto alpha = start;
    for (std::size_t k = 0; k < dim; ++k) {
      if (map[k] >= 0) alpha[k] = pts[static_cast<std::size_t>(map[k])][idx[static_cast<std::size_t>(map[k])]];
    }
    grid.push_back(std::move(alpha));
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < pts[a].size()) break;
      idx[a] = 0;
      if (a == 0) return grid;
    }
  }
}

namespace {

json bermudan_json(const BermudanCallModel& m) {
  return {{"kind", "bermudan"}, {"s0", m.s0}, {"sigma2", m.sigma2}, {"kappa1", m.kappa1}, {"kappa2", m.kappa2}};
}

json named(const std::string& name, json spec) {
  spec["name"] = name;
  return spec;
}

json axis_json(double from, double to, double step) { return {{"from", from}, {"to", to}, {"step", step}}; }

GridAxis parse_axis(const json& j) {
  if (!j.is_object()) throw ConfigError("profile axis: expected {\"from\", \"to\", \"step\"}");
  GridAxis a;
  a.from = j.at("from").get<double>();
  a.to = j.at("to").get<double>();
  a.step = j.at("step").get<double>();
  a.points();
  return a;
}

std::vector<NamedRandomizer> parse_randomizers(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("randomizers: expected a nonempty array");
  std::vector<NamedRandomizer> out;
  std::set<std::string> names;
  for (const auto& r : j) {
    if (!r.is_object()) throw ConfigError("randomizers: each entry must be an object");
    auto spec_json = r;
    std::string name;
    if (spec_json.contains("name")) {
      name = spec_json.at("name").get<std::string>();
      spec_json.erase("name");
    }
    NamedRandomizer n{name, RandomizerSpec::from_json(spec_json)};
    if (n.name.empty()) n.name = n.spec.label();
    if (n.name.find_first_of(",\n\"") != std::string::npos) {
      throw ConfigError("randomizers: name '" + n.name + "' may not contain commas, quotes or newlines");
    }
    if (!names.insert(n.name).second) throw ConfigError("randomizers: duplicate name '" + n.name + "'");
    out.push_back(std::move(n));
  }
  return out;
}

std::size_t parse_count(const json& j, const char* key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(std::string(key) + ": expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

fs::path resolve(const fs::path& base_dir, const std::string& file) {
  fs::path p(file);
  if (p.is_relative()) p = base_dir / p;
  if (!fs::exists(p)) throw ConfigError("file not found: " + p.string());
  return p;
}

ModelSpec parse_model(const json& j, const fs::path& base_dir) {
  ModelSpec m;
  const auto kind = j.is_string() ? j.get<std::string>() : j.value("kind", std::string{});
  if (kind == "stylized") {
    m.kind = ModelKind::stylized;
  } else if (kind == "bermudan") {
    m.kind = ModelKind::bermudan;
    if (j.is_object()) {
      m.bermudan.s0 = j.value("s0", m.bermudan.s0);
      m.bermudan.sigma2 = j.value("sigma2", m.bermudan.sigma2);
      m.bermudan.kappa1 = j.value("kappa1", m.bermudan.kappa1);
      m.bermudan.kappa2 = j.value("kappa2", m.bermudan.kappa2);
    }
    m.bermudan.validate();
  } else if (kind == "tree") {
    m.kind = ModelKind::tree;
    if (!j.is_object() || !j.contains("file")) throw ConfigError("model: tree needs a \"file\"");
    m.tree_file = resolve(base_dir, j.at("file").get<std::string>());
  } else {
    throw ConfigError("model: unknown kind '" + kind + "' (stylized | bermudan | tree)");
  }
  return m;
}

const std::set<std::string> kTopKeys{"preset", "model", "family", "randomizer", "randomizers", "n_paths",
                                     "n_test_paths", "seed", "out", "profile", "sweep"};

}  // namespace

json preset_json(const std::string& name) {
  if (name == "stylized") {
    return {{"model", {{"kind", "stylized"}}},
            {"family", "single_doob_scalar"},
            {"randomizers",
             {named("theta0", {{"kind", "none"}}), named("optimal", {{"kind", "optimal"}, {"theta", 1.0}}),
              named("naive", {{"kind", "naive"}, {"theta_naive", {1.0, 1.0, 1.0}}})}},
            {"n_paths", 100000},
            {"n_test_paths", 100000},
            {"profile", {{"axes", json::array({axis_json(-4.0, 3.0, 0.25)})}}}};
  }
  if (name == "pa1" || name == "pa2") {
    const bool one = name == "pa1";
    const double table_naive = one ? 1.6 : 4.8;
    const double profile_naive = one ? 0.16 : 0.5;
    return {{"model", bermudan_json(one ? preset_pa1() : preset_pa2())},
            {"family", "msty"},
            {"randomizers",
             {named("theta0", {{"kind", "none"}}),
              named("naive", {{"kind", "naive"}, {"theta_naive", {table_naive, 0.0, 0.0}}}),
              named("optimal", {{"kind", "optimal"}, {"theta", 1.0}})}},
            {"n_paths", 2000},
            {"n_test_paths", 100000},
            {"profile",
             {{"axes", json::array({axis_json(0.0, 2.0, 0.1), axis_json(0.0, 2.0, 0.1)})},
              {"assign", {0, 0, 1, 1}},
              {"n_paths", 10000},
              {"randomizers",
               {named("theta0", {{"kind", "none"}}), named("optimal", {{"kind", "optimal"}, {"theta", 1.0}}),
                named("naive", {{"kind", "naive"}, {"theta_naive", {profile_naive, profile_naive, profile_naive}}})}}}}};
  }
  throw ConfigError("unknown preset '" + name + "' (stylized | pa1 | pa2)");
}

ExperimentConfig ExperimentConfig::from_json(const json& input, const fs::path& base_dir) {
  if (!input.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : input.items()) {
    if (!kTopKeys.contains(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  json j = json::object();
  ExperimentConfig c;
  if (input.contains("preset")) {
    c.preset = input.at("preset").get<std::string>();
    j = preset_json(c.preset);
  }
  if (input.contains("randomizer") && input.contains("randomizers")) {
    throw ConfigError("config: give either \"randomizer\" or \"randomizers\", not both");
  }
  j.merge_patch(input);
  if (input.contains("randomizer")) {
    j["randomizers"] = json::array({j.at("randomizer")});
    j.erase("randomizer");
  }

  try {
    if (j.contains("model")) c.model = parse_model(j.at("model"), base_dir);
    if (j.contains("family")) {
      c.family = FamilySpec::from_json(j.at("family"));
      if (c.family.kind == FamilyKind::custom) c.family.custom_file = resolve(base_dir, c.family.custom_file.string());
    }
    c.randomizers = j.contains("randomizers") ? parse_randomizers(j.at("randomizers"))
                                              : std::vector<NamedRandomizer>{{"theta0", RandomizerSpec::none_spec()}};
    c.n_paths = j.contains("n_paths") ? parse_count(j.at("n_paths"), "n_paths") : 10000;
    if (c.n_paths == 0) throw ConfigError("n_paths: must be at least 1");
    if (j.contains("n_test_paths")) c.n_test_paths = parse_count(j.at("n_test_paths"), "n_test_paths");
    if (j.contains("seed") && !j.at("seed").is_null()) {
      const auto& sj = j.at("seed");
      if (!sj.is_number_unsigned() && !(sj.is_number_integer() && sj.get<long long>() >= 0)) {
        throw ConfigError("seed: expected a nonnegative integer");
      }
      c.seed = sj.get<std::uint64_t>();
    }
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("profile")) {
      const auto& p = j.at("profile");
      if (!p.is_object()) throw ConfigError("profile: expected an object");
      if (p.contains("axes")) {
        for (const auto& a : p.at("axes")) c.profile.axes.push_back(parse_axis(a));
      }
      if (p.contains("assign")) c.profile.assign = p.at("assign").get<std::vector<int>>();
      if (p.contains("base")) c.profile.base = p.at("base").get<std::vector<double>>();
      if (p.contains("randomizers")) c.profile.randomizers = parse_randomizers(p.at("randomizers"));
      if (p.contains("n_paths")) c.profile.n_paths = parse_count(p.at("n_paths"), "profile.n_paths");
      if (p.contains("w1_axis")) c.profile.w1_axis = parse_axis(p.at("w1_axis"));
    }
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      if (!s.is_object()) throw ConfigError("sweep: expected an object");
      if (s.contains("perturbations_per_tree")) {
        c.sweep.perturbations_per_tree = parse_count(s.at("perturbations_per_tree"), "sweep.perturbations_per_tree");
      }
      c.sweep.include_stylized = s.value("include_stylized", c.sweep.include_stylized);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + file.string() + ": " + e.what());
  }
  return from_json(j, file.has_parent_path() ? file.parent_path() : fs::path("."));
}

std::uint64_t ExperimentConfig::require_seed(const std::string& command) const {
  if (!seed) throw ConfigError(command + ": a seed is required (config \"seed\" or --seed)");
  return *seed;
}

namespace {

struct Sample {
  PathBundle paths;
  SnellData snell;
};

Sample make_sample(const ExperimentConfig& c, const TreeModel* tree, std::size_t n, std::uint64_t seed) {
  Sample s;
  switch (c.model.kind) {
    case ModelKind::stylized:
      s.paths = simulate(StylizedModel{}, n, seed);
      break;
    case ModelKind::bermudan:
      s.paths = simulate(c.model.bermudan, n, seed);
      break;
    case ModelKind::tree:
      s.paths = tree_bundle(*tree);
      break;
  }
  s.snell = snell_for(s.paths, tree);
  return s;
}

std::optional<TreeModel> load_tree(const ExperimentConfig& c) {
  if (c.model.kind != ModelKind::tree) return std::nullopt;
  return TreeModel::load(c.model.tree_file);
}

}  // namespace

ValueReport run_value(const ExperimentConfig& config) {
  switch (config.model.kind) {
    case ModelKind::stylized:
      return {1.25, 0.0, "closed form"};
    case ModelKind::bermudan: {
      const auto q = bermudan_value(config.model.bermudan);
      return {q.value, q.error, "adaptive quadrature"};
    }
    case ModelKind::tree:
      return {backward_induct(TreeModel::load(config.model.tree_file)).y0(), 0.0, "backward induction"};
  }
  throw ConfigError("value: unknown model");
}

std::vector<TableRow> run_minimize(const ExperimentConfig& config) {
  const auto seed = config.require_seed("minimize");
  const auto tree = load_tree(config);
  const TreeModel* tp = tree ? &*tree : nullptr;
  const auto train = make_sample(config, tp, config.n_paths, derive_seed(seed, "train"));
  const auto basis = build_basis(config.family, train.paths, &train.snell);

  std::optional<Sample> test;
  BasisMatrix test_basis;
  if (config.n_test_paths > 0 && !tree) {
    test = make_sample(config, tp, config.n_test_paths, derive_seed(seed, "test"));
    test_basis = build_basis(config.family, test->paths, &test->snell);
  }

  std::vector<TableRow> rows;
  for (const auto& r : config.randomizers) {
    const auto res = minimize(train.paths, basis, r.spec, &train.snell, seed, test ? &test->paths : nullptr,
                              test ? &test_basis : nullptr);
    if (res.lp.status != LPStatus::optimal) {
      throw NumericalError("minimize: LP for randomizer '" + r.name + "' ended " + to_string(res.lp.status) +
                           " after " + std::to_string(res.lp.iterations) + " iterations");
    }
    TableRow row;
    row.randomizer = r.name;
    row.family = config.family.name();
    row.n_paths = train.paths.n_paths();
    row.n_test_paths = test ? test->paths.n_paths() : 0;
    row.status = res.lp.status;
    row.iterations = res.lp.iterations;
    row.alpha_hat = res.lp.alpha_hat;
    row.lp_objective = res.lp.objective_value;
    row.m_hat = res.in_sample_raw.mean;
    row.se_hat = res.in_sample_raw.se;
    row.sigma_hat = res.in_sample_raw.std;
    row.m_hat_eta = res.in_sample.mean;
    row.sigma_hat_eta = res.in_sample.std;
    if (res.test) {
      row.m_test = res.test->mean;
      row.se_test = res.test->se;
      row.sigma_test = res.test->std;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ProfileReport run_profile(const ExperimentConfig& config) {
  const auto seed = config.require_seed("profile");
  const auto tree = load_tree(config);
  const TreeModel* tp = tree ? &*tree : nullptr;
  const auto n = config.profile.n_paths > 0 ? config.profile.n_paths : config.n_paths;
  const auto sample = make_sample(config, tp, n, derive_seed(seed, "profile"));
  const auto basis = build_basis(config.family, sample.paths, &sample.snell);
  const auto grid = config.profile.alpha_grid(basis.dim());
  const auto& randomizers = config.profile.randomizers.empty() ? config.randomizers : config.profile.randomizers;

  ProfileReport report;
  report.y0 = sample.snell.y0;
  for (const auto& r : randomizers) {
    ProfileCurve curve{r.name, {}};
    if (tree) {
      for (const auto& alpha : grid) {
        const auto e = exact_objective(sample.paths, basis, alpha, r.spec, &sample.snell);
        curve.rows.push_back({alpha, e.mean, std::sqrt(e.variance), 0.0, sample.paths.n_paths()});
      }
    } else {
      curve.rows = variance_profile(sample.paths, basis, grid, r.spec, &sample.snell, seed);
    }
    report.curves.push_back(std::move(curve));
  }
  if (config.model.kind == ModelKind::bermudan) {
    const auto& m = config.model.bermudan;
    for (double w1 : config.profile.w1_axis.points()) {
      const double s = m.stock(1, w1);
      report.figure2.push_back({w1, s, std::max(s - m.kappa1, 0.0), black_continuation(m, w1)});
    }
  }
  return report;
}

SweepReport run_verify(const ExperimentConfig& config) {
  auto options = config.sweep;
  if (config.seed) options.seed = *config.seed;
  if (config.model.kind == ModelKind::tree) return run_tree_sweep(TreeModel::load(config.model.tree_file), options);
  return run_sweep(options);
}

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  std::size_t dim = 0;
  for (const auto& r : rows) dim = std::max(dim, r.alpha_hat.size());
  out << "randomizer,family,n_paths,n_test_paths,status,iterations,lp_objective,m_hat,se_hat,sigma_hat,m_hat_eta,"
         "sigma_hat_eta,m_test,se_test,sigma_test";
  for (std::size_t k = 0; k < dim; ++k) out << ",alpha_" << k + 1;
  out << '\n';
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    out << r.randomizer << ',' << r.family << ',' << r.n_paths << ',' << r.n_test_paths << ',' << to_string(r.status)
        << ',' << r.iterations << ',' << format_double(r.lp_objective) << ',' << format_double(r.m_hat) << ','
        << format_double(r.se_hat) << ',' << format_double(r.sigma_hat) << ',' << format_double(r.m_hat_eta) << ','
        << format_double(r.sigma_hat_eta) << ',' << opt(r.m_test) << ',' << opt(r.se_test) << ',' << opt(r.sigma_test);
    for (std::size_t k = 0; k < dim; ++k) out << ',' << (k < r.alpha_hat.size() ? format_double(r.alpha_hat[k]) : "");
    out << '\n';
  }
}

void write_figure2_csv(std::ostream& out, const std::vector<Figure2Row>& rows) {
  out << "w1,s1,z1,c1\n";
  for (const auto& r : rows) {
    out << format_double(r.w1) << ',' << format_double(r.stock) << ',' << format_double(r.z1) << ','
        << format_double(r.c1) << '\n';
  }
}

namespace {

/// Writes to a sibling temporary file first so readers never see partial output.
template <class F>
void write_file(const fs::path& path, F&& body) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    body(out);
    if (!out) throw ConfigError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

int dispatch(const std::string& command, const ExperimentConfig& config, std::ostream& out) {
  if (command == "value") {
    const auto v = run_value(config);
    out << "Y*_0 = " << format_double(v.y0) << "  (" << v.method << ", error estimate " << format_double(v.error)
        << ")\n";
    return 0;
  }
  if (command == "minimize") {
    const auto rows = run_minimize(config);
    write_file(config.out / "table.csv", [&](std::ostream& f) { write_table_csv(f, rows); });
    for (const auto& r : rows) {
      out << r.randomizer << " [" << r.family << ", N=" << r.n_paths << "]: m_hat " << fixed(r.m_hat) << "  se "
          << fixed(r.se_hat) << "  sigma " << fixed(r.sigma_hat) << "  (with eta: m " << fixed(r.m_hat_eta) << ")";
      if (r.m_test) {
        out << " | test N=" << r.n_test_paths << ": m " << fixed(*r.m_test) << "  se " << fixed(*r.se_test)
            << "  sigma " << fixed(*r.sigma_test);
      }
      out << "\n  alpha_hat:";
      for (double a : r.alpha_hat) out << ' ' << fixed(a, 5);
      out << "  (" << r.iterations << " iterations)\n";
    }
    out << "wrote " << (config.out / "table.csv").string() << '\n';
    return 0;
  }
  if (command == "profile") {
    const auto report = run_profile(config);
    write_file(config.out / "profile.csv", [&](std::ostream& f) { write_profile_csv(f, report.curves, report.y0); });
    out << "Y*_0 = " << format_double(report.y0) << '\n';
    for (const auto& c : report.curves) {
      const auto best = std::min_element(c.rows.begin(), c.rows.end(),
                                         [](const auto& a, const auto& b) { return a.mean < b.mean; });
      out << c.name << ": " << c.rows.size() << " grid points, minimum " << fixed(best->mean) << " at alpha =";
      for (double a : best->alpha) out << ' ' << fixed(a, 4);
      out << '\n';
    }
    out << "wrote " << (config.out / "profile.csv").string() << '\n';
    if (!report.figure2.empty()) {
      write_file(config.out / "figure2.csv", [&](std::ostream& f) { write_figure2_csv(f, report.figure2); });
      out << "wrote " << (config.out / "figure2.csv").string() << '\n';
    }
    return 0;
  }
  if (command == "verify") {
    const auto report = run_verify(config);
    write_file(config.out / "sweep.json", [&](std::ostream& f) { f << report.json.dump(2) << '\n'; });
    out << "trials " << report.trials << ", failures " << report.failures << ", findings " << report.findings << '\n';
    out << (report.passed() ? "all equivalences hold" : "VERIFICATION FAILED") << '\n';
    out << "wrote " << (config.out / "sweep.json").string() << '\n';
    return report.passed() ? 0 : 4;
  }
  throw ConfigError("unknown command '" + command + "' (value | minimize | profile | verify)");
}

}  // namespace

int run_command(const std::string& command, const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(command, config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dualstop
