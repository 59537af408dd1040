#pragma once

// Monte Carlo phase scans over (theta, N), their statistics, growth-law fits,
// and the CSV / JSON persistence used by the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lgpolymer/config.hpp"
#include "lgpolymer/polymer.hpp"
#include "lgpolymer/tracy_widom.hpp"

namespace lgp {

enum class ScanMode { exact, corners };

struct ExperimentConfig {
  std::vector<double> theta_list;
  std::vector<int> n_list;
  int replications = 1;
  std::uint64_t master_seed = 0;
  ScanMode mode = ScanMode::exact;
  double delta = 0.0;  // corners mode only, in (0, 1/3)
  bool compute_operator = false;
  std::filesystem::path csv_path = "scan.csv";
  std::filesystem::path summary_path = "summary.json";

  /// Throws std::invalid_argument on empty lists, non-positive entries,
  /// replications < 1, or a corners delta outside (0, 1/3).
  void validate() const;
};

/// {0.5, 1.5, theta_c/2, theta_c - 0.3, theta_c, theta_c + 0.3, 5}.
std::vector<double> default_theta_grid();

/// Reads a configuration. `theta` may be a number list or the string "default".
ExperimentConfig parse_experiment_config(const std::string& text);

struct ExperimentRecord {
  double theta = 0.0;
  int n = 0;
  int theta_index = 0;
  int n_index = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double f_n = 0.0;
  LatticePoint arg_start;
  LatticePoint arg_end;
  double log_z_corner = 0.0;  // log Z(1,1; N,N)
  double rescaled = 0.0;      // rescaled corner free energy
  std::optional<double> neg_log_lambda1;
  double elapsed_ms = 0.0;

  /// |end - start|_1 of the maximiser.
  int separation() const { return (arg_end.x - arg_start.x) + (arg_end.y - arg_start.y); }
};

/// Seed of replicate `rep` at grid position (theta_index, n_index).
std::uint64_t replicate_seed(std::uint64_t master, int theta_index, int n_index, int rep);

/// One record; exposed so single instances can be rerun in isolation.
ExperimentRecord run_replicate(const ExperimentConfig& config, int theta_index, int n_index, int rep);

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; 0 for a single value
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
};
Moments describe(std::vector<double> values);

enum class GrowthModel { power, log, crit };
std::string to_string(GrowthModel model);

struct GrowthFit {
  GrowthModel model = GrowthModel::power;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares with intercept of the statistic against the model regressor:
///   power: log y vs log N;  log: y vs log N;  crit: y vs N^(1/3) (log N)^(2/3).
/// Needs at least 3 distinct N (std::invalid_argument otherwise); power needs y > 0.
GrowthFit fit_growth_exponent(std::span<const std::pair<double, double>> points, GrowthModel model);

struct CellSummary {
  double theta = 0.0;
  int n = 0;
  Moments f_n;
  Moments rescaled;
  Moments separation;
};

struct ThetaFits {
  double theta = 0.0;
  std::vector<GrowthFit> fits;  // models that could be fitted
};

struct ScanResult {
  std::vector<ExperimentRecord> records;  // sorted by (theta, N, replicate)
  std::vector<std::string> failures;
  std::vector<CellSummary> cells;
  std::vector<ThetaFits> fits;
  double wall_ms = 0.0;
  int threads = 1;
};

/// Runs every (theta, N, replicate) on `threads` workers. Failed records are
/// reported and skipped; more than 1% failures throws std::runtime_error.
ScanResult run_phase_scan(const ExperimentConfig& config, int threads);

void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records);

/// Git blob SHA-1 of `bytes`, hex encoded.
std::string content_hash(const std::string& bytes);

nlohmann::json summary_json(const ExperimentConfig& config, const ScanResult& result,
                            const std::string& config_text);

struct TwComparison {
  double theta = 0.0;
  int n = 0;
  int replications = 0;
  double ks_free_energy = 0.0;  // (F_N + 2N psi(theta/2)) / (sigma N^(1/3)) vs F_GUE
  double ks_corner = 0.0;       // rescaled corner free energy vs F_GUE
  double corner_fraction = 0.0; // maximiser inside the delta = 1/12 corners
  std::vector<double> f_n_samples;          // raw F_N
  std::vector<double> free_energy_samples;  // rescaled F_N
  std::vector<double> corner_samples;
};

/// Throws std::domain_error for theta >= theta_c.
TwComparison subcritical_tw_comparison(double theta, int n, int replications, std::uint64_t seed,
                                       const TracyWidomGue& tw, int threads = 1);

}  // namespace lgp
