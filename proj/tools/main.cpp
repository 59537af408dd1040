// lgpolymer: command-line front end for sampling weight fields, computing
// free energies, checking the honeycomb operator, tabulating F_GUE, and
// running phase scans.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lgpolymer/harness.hpp"
#include "lgpolymer/honeycomb.hpp"
#include "lgpolymer/parallel.hpp"
#include "lgpolymer/polymer.hpp"
#include "lgpolymer/sampler.hpp"
#include "lgpolymer/specialfn.hpp"
#include "lgpolymer/tracy_widom.hpp"

using nlohmann::json;

namespace {

void emit(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

json point(lgp::LatticePoint p) { return json::array({p.x, p.y}); }

// Rounds to 15 significant digits.
double sig15(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return std::strtod(buf, nullptr);
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_constants(double theta) {
  const lgp::PolymerParams p(theta);
  const lgp::ScaleFunctions sf(theta);
  json j = {{"theta", sig15(p.theta)},
            {"theta_c", sig15(p.theta_c)},
            {"phase", p.phase() < 0 ? "subcritical" : (p.phase() > 0 ? "supercritical" : "critical")},
            {"psi_half_theta", sig15(p.psi_half_theta)},
            {"sigma_theta", sig15(p.sigma_theta)},
            {"h_theta_1", sig15(sf.h(1.0))},
            {"sigma_theta_1", sig15(sf.sigma_x(1.0))},
            {"g_inverse_1", sig15(sf.g_inverse(1.0))}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_free_energy(const std::string& field_path, bool exact, double delta, const std::string& out) {
  const lgp::WeightField field = lgp::read_field(field_path);
  const int threads = lgp::default_thread_count();
  const auto t0 = std::chrono::steady_clock::now();
  const lgp::MaxFreeEnergyResult r =
      exact ? lgp::max_free_energy_exact(field, {.max_n = std::max(256, field.rows), .threads = threads})
            : lgp::max_free_energy_corners(field, delta, threads);
  json j = {{"mode", lgp::to_string(r.mode)},
            {"N", field.rows},
            {"theta", field.theta},
            {"seed", field.seed},
            {"value", r.value},
            {"arg_start", point(r.arg_start)},
            {"arg_end", point(r.arg_end)},
            {"elapsed_ms", ms_since(t0)}};
  if (!exact) j["delta"] = delta;
  emit(j, out);
  return 0;
}

int cmd_operator_check(const std::string& field_path, const std::string& mode, const std::string& out) {
  const lgp::WeightField field = lgp::read_field(field_path);
  json j = {{"mode", mode}, {"N", field.rows}, {"theta", field.theta}, {"seed", field.seed}};
  const auto t0 = std::chrono::steady_clock::now();
  if (mode == "identity") {
    const lgp::InverseCheckOptions opts;
    j["tolerances"] = {{"relative", opts.rel_tol}, {"absolute_zero", opts.abs_tol_zero}};
    const int n = field.rows;
    std::size_t checked = 0, passed = 0;
    double worst = 0.0;
    for (int sx = 1; sx <= n; ++sx)
      for (int sy = 1; sy <= n; ++sy)
        for (int tx = 1; tx <= n; ++tx)
          for (int ty = 1; ty <= n; ++ty) {
            const auto c = lgp::inverse_entry_check(field, {sx, sy}, {tx, ty});
            ++checked;
            passed += c.ok ? 1 : 0;
            if (c.rhs != 0.0) worst = std::max(worst, std::abs(c.lhs - c.rhs) / std::abs(c.rhs));
          }
    j["entries"] = checked;
    j["matching"] = passed;
    j["max_relative_error"] = worst;
    j["ok"] = checked == passed;
  } else if (mode == "lambda1") {
    const lgp::SpectralOptions opts;
    j["tolerances"] = {{"iteration", opts.tolerance}, {"sandwich", opts.sandwich_tolerance}};
    const lgp::SpectralResult s = lgp::neg_log_lambda1(field, opts);
    j["f_n"] = s.f_n;
    j["neg_log_lambda1"] = s.neg_log_lambda1;
    j["upper_bound"] = s.f_n + 4.0 * std::log(static_cast<double>(field.rows));
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    j["sandwich_ok"] = s.sandwich_ok;
    j["ok"] = s.converged && s.sandwich_ok &&
              (!s.dense_neg_log_lambda1 || std::abs(*s.dense_neg_log_lambda1 - s.neg_log_lambda1) <= 1e-6);
    if (s.dense_neg_log_lambda1) j["dense_neg_log_lambda1"] = *s.dense_neg_log_lambda1;
  } else {
    const Eigen::VectorXd s = lgp::spectrum_small(field);
    j["singular_values"] = std::vector<double>(s.data(), s.data() + s.size());
    j["neg_log_lambda1"] = -std::log(s[0]);
    double log_product = 0.0;
    for (double v : s) log_product += std::log(v);
    // product of singular values equals |det| = prod 1/w
    j["log_det_error"] = std::abs(log_product + field.log_weights.sum());
    j["ok"] = j["log_det_error"].get<double>() <= 1e-8 * std::max(1.0, std::abs(log_product));
  }
  j["elapsed_ms"] = ms_since(t0);
  emit(j, out);
  return 0;
}

int cmd_tw(const std::string& grid, const std::string& out) {
  double a = 0.0, b = 0.0, step = 0.0;
  char c1 = 0, c2 = 0;
  std::istringstream in(grid);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0) || b < a) {
    throw CLI::ValidationError("--grid", "expected a:b:step with a <= b and step > 0");
  }
  const lgp::TracyWidomGue tw;
  std::ofstream file;
  if (!out.empty() && out != "-") {
    file.open(out);
    if (!file) throw std::runtime_error("cannot open " + out);
  }
  std::ostream& os = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  os << "x,F_GUE\n";
  const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
  char buf[64];
  for (long i = 0; i <= count; ++i) {
    const double x = a + static_cast<double>(i) * step;
    std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", x, tw.cdf(x));
    os << buf;
  }
  return 0;
}

int cmd_phase_scan(const std::string& config_path) {
  const std::string text = read_text(config_path);
  const lgp::ExperimentConfig config = lgp::parse_experiment_config(text);
  const lgp::ScanResult result = lgp::run_phase_scan(config, lgp::default_thread_count());
  {
    std::ofstream csv(config.csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open " + config.csv_path.string());
    lgp::write_records_csv(csv, result.records);
  }
  emit(lgp::summary_json(config, result, text), config.summary_path.string());
  std::cerr << result.records.size() << " records, " << result.failures.size() << " failed, "
            << result.wall_ms / 1000.0 << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"log-gamma polymer free energies, honeycomb operator, and Tracy-Widom tools"};
  app.require_subcommand(1);

  double theta = 1.0;
  auto* constants = app.add_subcommand("constants", "print theta_c and the constants attached to theta");
  constants->add_option("--theta", theta, "shape parameter")->required()->check(CLI::PositiveNumber);

  int rows = 0, cols = 0;
  std::uint64_t seed = 0;
  std::string out;
  auto* sample = app.add_subcommand("sample", "sample an inverse-gamma weight field");
  sample->add_option("--theta", theta, "shape parameter")->required()->check(CLI::PositiveNumber);
  sample->add_option("--rows", rows, "rows")->required()->check(CLI::PositiveNumber);
  sample->add_option("--cols", cols, "columns")->required()->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "seed")->required();
  sample->add_option("--out", out, "output field file")->required();

  std::string field_path;
  double delta = 0.0;
  auto* free_energy = app.add_subcommand("free-energy", "maximal free energy of a field");
  free_energy->add_option("--field", field_path, "field file")->required()->check(CLI::ExistingFile);
  auto* exact_flag = free_energy->add_flag("--exact", "all ordered pairs (default)");
  auto* corners_opt = free_energy->add_option("--corners", delta, "restrict to the corners of exponent delta");
  exact_flag->excludes(corners_opt);
  free_energy->add_option("--out", out, "output JSON (default stdout)");

  std::string mode = "lambda1";
  auto* op = app.add_subcommand("operator-check", "honeycomb operator checks");
  op->add_option("--field", field_path, "field file")->required()->check(CLI::ExistingFile);
  op->add_option("--mode", mode, "identity | lambda1 | spectrum")
      ->check(CLI::IsMember({"identity", "lambda1", "spectrum"}));
  op->add_option("--out", out, "output JSON (default stdout)");

  std::string grid;
  auto* tw = app.add_subcommand("tw", "tabulate the GUE Tracy-Widom CDF");
  tw->add_option("--grid", grid, "a:b:step")->required();
  tw->add_option("--out", out, "output CSV (default stdout)");

  std::string config_path;
  auto* scan = app.add_subcommand("phase-scan", "Monte Carlo scan over theta and N");
  scan->add_option("--config", config_path, "TOML configuration")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (constants->parsed()) return cmd_constants(theta);
    if (sample->parsed()) {
      const lgp::WeightField f = lgp::sample_field(theta, rows, cols, seed, lgp::default_thread_count());
      lgp::write_field(out, f);
      return 0;
    }
    if (free_energy->parsed()) {
      const bool corners = corners_opt->count() > 0;
      if (corners && !(delta > 0.0 && delta < 1.0 / 3.0)) {
        throw CLI::ValidationError("--corners", "delta must lie in (0, 1/3)");
      }
      return cmd_free_energy(field_path, !corners, delta, out);
    }
    if (op->parsed()) return cmd_operator_check(field_path, mode, out);
    if (tw->parsed()) return cmd_tw(grid, out);
    if (scan->parsed()) return cmd_phase_scan(config_path);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
