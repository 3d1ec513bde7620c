#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualstop/dual_engine.hpp"
#include "dualstop/lp_solver.hpp"
#include "dualstop/market_models.hpp"
#include "dualstop/martingale_families.hpp"
#include "dualstop/optimality_lab.hpp"
#include "dualstop/randomizers.hpp"
#include "dualstop/tree_model.hpp"

namespace dualstop {

struct ModelSpec {
  ModelKind kind = ModelKind::stylized;
  BermudanCallModel bermudan;
  std::filesystem::path tree_file;
};

struct NamedRandomizer {
  std::string name;
  RandomizerSpec spec;
};

struct GridAxis {
  double from = 0.0;
  double to = 0.0;
  double step = 1.0;

  std::vector<double> points() const;
};

/// Parameter grid for profiles: each axis value is written into the alpha
/// components mapped to it; components mapped to -1 keep their base value.
struct ProfileSpec {
  std::vector<GridAxis> axes;
  std::vector<int> assign;
  std::vector<double> base;
  std::vector<NamedRandomizer> randomizers;
  std::size_t n_paths = 0;  // 0: the experiment's n_paths
  GridAxis w1_axis{-3.0, 3.0, 0.05};

  std::vector<std::vector<double>> alpha_grid(std::size_t dim) const;
};

struct ExperimentConfig {
  std::string preset;
  ModelSpec model;
  FamilySpec family;
  std::vector<NamedRandomizer> randomizers;
  std::size_t n_paths = 0;
  std::size_t n_test_paths = 0;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  ProfileSpec profile;
  SweepOptions sweep;

  /// Expands "preset" first; explicit fields override it. Relative file names
  /// resolve against base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
  static ExperimentConfig load(const std::filesystem::path& file);

  std::uint64_t require_seed(const std::string& command) const;
};

/// Full parameter set of a named preset (stylized | pa1 | pa2).
nlohmann::json preset_json(const std::string& name);

struct ValueReport {
  double y0 = 0.0;
  double error = 0.0;
  std::string method;
};

ValueReport run_value(const ExperimentConfig& config);

struct TableRow {
  std::string randomizer;
  std::string family;
  std::size_t n_paths = 0;
  std::size_t n_test_paths = 0;
  LPStatus status = LPStatus::optimal;
  std::size_t iterations = 0;
  std::vector<double> alpha_hat;
  double lp_objective = 0.0;
  double m_hat = 0.0;  // in-sample, unrandomized
  double se_hat = 0.0;
  double sigma_hat = 0.0;
  double m_hat_eta = 0.0;  // in-sample with the LP's perturbation
  double sigma_hat_eta = 0.0;
  std::optional<double> m_test;
  std::optional<double> se_test;
  std::optional<double> sigma_test;
};

/// One LP minimization per randomizer on a shared training sample. Throws
/// NumericalError if any LP ends non-optimal.
std::vector<TableRow> run_minimize(const ExperimentConfig& config);

struct Figure2Row {
  double w1 = 0.0;
  double stock = 0.0;
  double z1 = 0.0;
  double c1 = 0.0;
};

struct ProfileReport {
  double y0 = 0.0;
  std::vector<ProfileCurve> curves;
  std::vector<Figure2Row> figure2;  // Bermudan models only
};

ProfileReport run_profile(const ExperimentConfig& config);

SweepReport run_verify(const ExperimentConfig& config);

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows);
void write_figure2_csv(std::ostream& out, const std::vector<Figure2Row>& rows);

/// Runs a CLI command, writes its files under config.out, prints a summary,
/// and returns the process exit code (0 ok, 2 config, 3 numerical, 4 verification).
int run_command(const std::string& command, const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace dualstop
