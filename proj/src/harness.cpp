#include "lgpolymer/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <mutex>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>
#include <openssl/evp.h>

#include "lgpolymer/honeycomb.hpp"
#include "lgpolymer/parallel.hpp"
#include "lgpolymer/rng.hpp"
#include "lgpolymer/specialfn.hpp"

namespace lgp {

void ExperimentConfig::validate() const {
  if (theta_list.empty()) throw std::invalid_argument("config: theta list is empty");
  if (n_list.empty()) throw std::invalid_argument("config: N list is empty");
  for (double t : theta_list) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("config: theta must be positive");
  }
  for (int n : n_list) {
    if (n < 1) throw std::invalid_argument("config: N must be positive");
  }
  if (replications < 1) throw std::invalid_argument("config: replications must be at least 1");
  if (mode == ScanMode::corners && !(delta > 0.0 && delta < 1.0 / 3.0)) {
    throw std::invalid_argument("config: corners mode needs delta in (0, 1/3)");
  }
}

std::vector<double> default_theta_grid() {
  const double tc = critical_theta();
  return {0.5, 1.5, tc / 2.0, tc - 0.3, tc, tc + 0.3, 5.0};
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  const ConfigTree tree = ConfigTree::parse(text);
  static const std::set<std::string> known = {
      "theta", "n", "replications", "master_seed", "mode", "delta", "compute_operator",
      "output.csv", "output.summary"};
  for (const auto& [key, value] : tree.values()) {
    if (!known.count(key)) throw ConfigError("unknown key " + key);
  }
  ExperimentConfig c;
  const ConfigValue& theta = tree.at("theta");
  if (!theta.is_array() && std::holds_alternative<std::string>(std::get<ConfigScalar>(theta.data))) {
    if (tree.string("theta") != "default") throw ConfigError("theta: expected numbers or \"default\"");
    c.theta_list = default_theta_grid();
  } else {
    c.theta_list = tree.number_list("theta");
  }
  for (double n : tree.number_list("n")) {
    if (n != std::floor(n) || n < 1 || n > 1e6) throw ConfigError("n: expected positive integers");
    c.n_list.push_back(static_cast<int>(n));
  }
  if (tree.has("replications")) {
    const double r = tree.number("replications");
    if (r != std::floor(r) || r < 1 || r > 1e9) throw ConfigError("replications: expected a positive integer");
    c.replications = static_cast<int>(r);
  }
  if (tree.has("master_seed")) c.master_seed = tree.unsigned_integer("master_seed");
  if (tree.has("mode")) {
    const std::string mode = tree.string("mode");
    if (mode == "exact") {
      c.mode = ScanMode::exact;
    } else if (mode == "corners") {
      c.mode = ScanMode::corners;
    } else {
      throw ConfigError("mode: expected \"exact\" or \"corners\"");
    }
  }
  if (tree.has("delta")) c.delta = tree.number("delta");
  if (tree.has("compute_operator")) c.compute_operator = tree.boolean("compute_operator");
  if (tree.has("output.csv")) c.csv_path = tree.string("output.csv");
  if (tree.has("output.summary")) c.summary_path = tree.string("output.summary");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::uint64_t replicate_seed(std::uint64_t master, int theta_index, int n_index, int rep) {
  return derive_seed(master, {static_cast<std::uint64_t>(theta_index), static_cast<std::uint64_t>(n_index),
                              static_cast<std::uint64_t>(rep)});
}

ExperimentRecord run_replicate(const ExperimentConfig& config, int theta_index, int n_index, int rep) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentRecord r;
  r.theta = config.theta_list.at(static_cast<std::size_t>(theta_index));
  r.n = config.n_list.at(static_cast<std::size_t>(n_index));
  r.theta_index = theta_index;
  r.n_index = n_index;
  r.replicate = rep;
  r.seed = replicate_seed(config.master_seed, theta_index, n_index, rep);

  const WeightField field = sample_field(r.theta, r.n, r.n, r.seed);
  const MaxFreeEnergyResult f = config.mode == ScanMode::exact
                                    ? max_free_energy_exact(field, {.max_n = std::max(256, r.n), .threads = 1})
                                    : max_free_energy_corners(field, config.delta);
  r.f_n = f.value;
  r.arg_start = f.arg_start;
  r.arg_end = f.arg_end;
  r.log_z_corner = log_partition(field, {1, 1}, {r.n, r.n});
  r.rescaled = rescaled_free_energy(field, r.n, r.n);
  if (!std::isfinite(r.f_n) || !std::isfinite(r.rescaled)) throw std::runtime_error("non-finite statistic");
  if (r.f_n < r.log_z_corner - 1e-9 * std::max(1.0, std::abs(r.f_n))) {
    throw std::logic_error("F_N below log Z(1,1;N,N)");
  }
  if (config.compute_operator) {
    const SpectralResult s = neg_log_lambda1(field);
    if (!s.converged) throw std::runtime_error("power iteration did not converge");
    if (config.mode == ScanMode::exact && !s.sandwich_ok) throw std::logic_error("sandwich bound violated");
    r.neg_log_lambda1 = s.neg_log_lambda1;
  }
  r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Moments describe(std::vector<double> values) {
  Moments m;
  m.count = values.size();
  if (values.empty()) return m;
  std::sort(values.begin(), values.end());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (values[i] - mean);
  }
  m.mean = mean;
  m.variance = values.size() > 1 ? m2 / static_cast<double>(values.size() - 1) : 0.0;
  auto quantile = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  m.q10 = quantile(0.1);
  m.q50 = quantile(0.5);
  m.q90 = quantile(0.9);
  return m;
}

std::string to_string(GrowthModel model) {
  switch (model) {
    case GrowthModel::power: return "power";
    case GrowthModel::log: return "log";
    case GrowthModel::crit: return "crit";
  }
  return "unknown";
}

GrowthFit fit_growth_exponent(std::span<const std::pair<double, double>> points, GrowthModel model) {
  std::set<double> distinct;
  for (const auto& [n, y] : points) {
    if (!(n >= 1.0) || !std::isfinite(y)) throw std::invalid_argument("fit_growth_exponent: need N >= 1 and finite y");
    distinct.insert(n);
  }
  if (distinct.size() < 3) throw std::invalid_argument("fit_growth_exponent: degenerate design, need 3 distinct N");
  const auto rows = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(rows, 2);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto [n, v] = points[static_cast<std::size_t>(i)];
    const double ln = std::log(n);
    switch (model) {
      case GrowthModel::power:
        if (!(v > 0.0)) throw std::domain_error("fit_growth_exponent: power model needs positive statistics");
        a(i, 0) = ln;
        y[i] = std::log(v);
        break;
      case GrowthModel::log:
        a(i, 0) = ln;
        y[i] = v;
        break;
      case GrowthModel::crit:
        a(i, 0) = std::cbrt(n) * std::pow(ln, 2.0 / 3.0);
        y[i] = v;
        break;
    }
    a(i, 1) = 1.0;
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
  const double ss_res = (a * c - y).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  GrowthFit fit;
  fit.model = model;
  fit.slope = c[0];
  fit.intercept = c[1];
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

ScanResult run_phase_scan(const ExperimentConfig& config, int threads) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t nt = config.theta_list.size(), nn = config.n_list.size();
  const auto reps = static_cast<std::size_t>(config.replications);
  const std::size_t total = nt * nn * reps;

  std::vector<std::optional<ExperimentRecord>> slots(total);
  std::vector<std::string> errors(total);
  // Larger N first so the long jobs do not end up last on one worker.
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return config.n_list[(a / reps) % nn] > config.n_list[(b / reps) % nn];
  });
  parallel_for(total, threads, [&](std::size_t k) {
    const std::size_t i = order[k];
    const int ti = static_cast<int>(i / (nn * reps));
    const int ni = static_cast<int>((i / reps) % nn);
    const int rep = static_cast<int>(i % reps);
    try {
      slots[i] = run_replicate(config, ti, ni, rep);
    } catch (const std::exception& e) {
      errors[i] = "theta_index=" + std::to_string(ti) + " n_index=" + std::to_string(ni) +
                  " replicate=" + std::to_string(rep) + ": " + e.what();
    }
  });

  ScanResult result;
  result.threads = threads;
  for (std::size_t i = 0; i < total; ++i) {
    if (slots[i]) {
      result.records.push_back(*slots[i]);
    } else {
      result.failures.push_back(errors[i]);
      std::cerr << "record failed: " << errors[i] << '\n';
    }
  }
  if (static_cast<double>(result.failures.size()) > 0.01 * static_cast<double>(total)) {
    throw std::runtime_error("phase scan: " + std::to_string(result.failures.size()) + " of " +
                             std::to_string(total) + " records failed");
  }

  for (std::size_t ti = 0; ti < nt; ++ti) {
    std::vector<std::pair<double, double>> means;
    for (std::size_t ni = 0; ni < nn; ++ni) {
      std::vector<double> f, z, sep;
      for (const auto& r : result.records) {
        if (r.theta_index == static_cast<int>(ti) && r.n_index == static_cast<int>(ni)) {
          f.push_back(r.f_n);
          z.push_back(r.rescaled);
          sep.push_back(r.separation());
        }
      }
      CellSummary cell{config.theta_list[ti], config.n_list[ni], describe(f), describe(z), describe(sep)};
      if (cell.f_n.count > 0) means.emplace_back(cell.n, cell.f_n.mean);
      result.cells.push_back(cell);
    }
    ThetaFits tf{config.theta_list[ti], {}};
    for (GrowthModel m : {GrowthModel::power, GrowthModel::log, GrowthModel::crit}) {
      try {
        tf.fits.push_back(fit_growth_exponent(means, m));
      } catch (const std::exception&) {
        // too few N values, or non-positive means for the power model
      }
    }
    result.fits.push_back(tf);
  }
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json to_json(const Moments& m) {
  return {{"count", m.count}, {"mean", m.mean}, {"variance", m.variance},
          {"q10", m.q10},     {"q50", m.q50},   {"q90", m.q90}};
}

}  // namespace

void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records) {
  out << "theta,N,replicate,seed,f_n,arg_start_x,arg_start_y,arg_end_x,arg_end_y,separation,"
         "log_z_corner,rescaled,neg_log_lambda1\n";
  for (const auto& r : records) {
    out << fmt(r.theta) << ',' << r.n << ',' << r.replicate << ',' << r.seed << ',' << fmt(r.f_n) << ','
        << r.arg_start.x << ',' << r.arg_start.y << ',' << r.arg_end.x << ',' << r.arg_end.y << ','
        << r.separation() << ',' << fmt(r.log_z_corner) << ',' << fmt(r.rescaled) << ','
        << (r.neg_log_lambda1 ? fmt(*r.neg_log_lambda1) : std::string()) << '\n';
  }
}

std::string content_hash(const std::string& bytes) {
  const std::string blob = "blob " + std::to_string(bytes.size()) + '\0' + bytes;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("content_hash: SHA-1 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

nlohmann::json summary_json(const ExperimentConfig& config, const ScanResult& result,
                            const std::string& config_text) {
  nlohmann::json j;
  j["config"] = {{"theta", config.theta_list},
                 {"n", config.n_list},
                 {"replications", config.replications},
                 {"master_seed", config.master_seed},
                 {"mode", config.mode == ScanMode::exact ? "exact" : "corners"},
                 {"delta", config.delta},
                 {"compute_operator", config.compute_operator},
                 {"csv", config.csv_path.string()},
                 {"summary", config.summary_path.string()}};
  j["config_hash"] = content_hash(config_text);
  j["wall_clock_ms"] = result.wall_ms;
  j["threads"] = result.threads;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["finished_at"] = stamp;
  j["records"] = result.records.size();
  j["failures"] = result.failures;
  double cpu_ms = 0.0;
  for (const auto& r : result.records) cpu_ms += r.elapsed_ms;
  j["record_ms_total"] = cpu_ms;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : result.cells) {
    j["cells"].push_back({{"theta", c.theta},
                          {"N", c.n},
                          {"f_n", to_json(c.f_n)},
                          {"rescaled", to_json(c.rescaled)},
                          {"separation", to_json(c.separation)}});
  }
  j["fits"] = nlohmann::json::array();
  for (const auto& tf : result.fits) {
    nlohmann::json fits = nlohmann::json::object();
    for (const auto& f : tf.fits) {
      fits[to_string(f.model)] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
    }
    j["fits"].push_back({{"theta", tf.theta}, {"models", fits}});
  }
  return j;
}

TwComparison subcritical_tw_comparison(double theta, int n, int replications, std::uint64_t seed,
                                       const TracyWidomGue& tw, int threads) {
  if (!(theta > 0.0) || theta >= critical_theta()) {
    throw std::domain_error("subcritical_tw_comparison: theta must lie in (0, theta_c)");
  }
  if (n < 1 || replications < 1) throw std::invalid_argument("subcritical_tw_comparison: bad size");
  const ScaleFunctions sf(theta);
  const double centre = 2.0 * n * digamma(theta / 2.0);
  const double scale = sf.sigma_x(1.0) * std::cbrt(static_cast<double>(n));
  const int side = corner_sets(n, 1.0 / 12.0).side;

  TwComparison out;
  out.theta = theta;
  out.n = n;
  out.replications = replications;
  out.f_n_samples.resize(static_cast<std::size_t>(replications));
  out.free_energy_samples.resize(static_cast<std::size_t>(replications));
  out.corner_samples.resize(static_cast<std::size_t>(replications));
  std::vector<char> in_corner(static_cast<std::size_t>(replications));
  parallel_for(static_cast<std::size_t>(replications), threads, [&](std::size_t r) {
    const WeightField field = sample_field(theta, n, n, derive_seed(seed, {static_cast<std::uint64_t>(n), r}));
    const MaxFreeEnergyResult f = max_free_energy_exact(field, {.max_n = std::max(256, n), .threads = 1});
    out.f_n_samples[r] = f.value;
    out.free_energy_samples[r] = (f.value + centre) / scale;
    out.corner_samples[r] = rescaled_free_energy(field, n, n);
    in_corner[r] = f.arg_start.x <= side && f.arg_start.y <= side && f.arg_end.x > n - side &&
                   f.arg_end.y > n - side;
  });
  const auto cdf = [&](double x) { return tw.cdf(x); };
  std::vector<double> a = out.free_energy_samples, b = out.corner_samples;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  out.ks_free_energy = ks_distance(a, cdf);
  out.ks_corner = ks_distance(b, cdf);
  out.corner_fraction =
      static_cast<double>(std::count(in_corner.begin(), in_corner.end(), 1)) / static_cast<double>(replications);
  return out;
}

}  // namespace lgp
