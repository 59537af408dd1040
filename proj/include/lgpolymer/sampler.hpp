#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace lgp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// An array of i.i.d. inverse-gamma(theta) weights, stored as natural logs.
/// Lattice point (x, y) with 1 <= x <= rows, 1 <= y <= cols lives at
/// log_weights(x - 1, y - 1).
struct WeightField {
  int rows = 0;
  int cols = 0;
  std::uint64_t seed = 0;
  double theta = 0.0;
  RowMatrix log_weights;

  double log_weight(int x, int y) const { return log_weights(x - 1, y - 1); }
  bool contains(int x, int y) const { return x >= 1 && y >= 1 && x <= rows && y <= cols; }
  bool is_square() const { return rows == cols; }

  /// Wraps explicit log-weights (tests and hand-built examples).
  static WeightField from_log_weights(RowMatrix log_w, double theta = 1.0,
                                      std::uint64_t seed = 0);
};

/// Upper bound on rows*cols accepted by sample_field.
inline constexpr std::int64_t kMaxFieldCells = std::int64_t{1} << 26;

/// log G for G ~ Gamma(theta, 1), drawn in log space so that shapes below
/// one do not underflow.
template <typename Urbg>
double sample_log_gamma(double theta, Urbg& rng);

/// Samples the field cell by cell; cell (i, j) uses its own stream derived
/// from (seed, i, j), so the result does not depend on the thread count.
WeightField sample_field(double theta, int rows, int cols, std::uint64_t seed,
                         int threads = 1);

/// Monte Carlo estimate of E[exp(t X)] with X = -log w = log G.
/// Compare against Gamma(theta + t) / Gamma(theta).
double mgf_check(double theta, double t, std::int64_t n_samples, std::uint64_t seed);

/// Fraction of replications in which max_{i <= n} log w_i >= (1 + a) log(n) / theta.
double max_log_weight_tail(double theta, std::int64_t n, double a, std::int64_t replications,
                           std::uint64_t seed);

/// Sample moments of X = -log w over n draws (mean, unbiased variance).
struct MomentEstimate {
  double mean;
  double variance;
  std::int64_t count;
};
MomentEstimate neg_log_weight_moments(double theta, std::int64_t n, std::uint64_t seed);

// Binary field format: "LGWF", u32 version = 1, u64 seed, f64 theta,
// u32 rows, u32 cols, rows*cols f64 log-weights row-major; all little-endian.
void write_field(std::ostream& out, const WeightField& field);
void write_field(const std::filesystem::path& path, const WeightField& field);
WeightField read_field(std::istream& in);
WeightField read_field(const std::filesystem::path& path);

}  // namespace lgp

#include "lgpolymer/sampler_impl.hpp"
