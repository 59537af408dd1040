#include "lgpolymer/sampler.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "lgpolymer/parallel.hpp"
#include "lgpolymer/rng.hpp"

namespace lgp {

WeightField WeightField::from_log_weights(RowMatrix log_w, double theta, std::uint64_t seed) {
  if (log_w.size() == 0) throw std::invalid_argument("WeightField: empty array");
  if (!log_w.allFinite()) throw std::domain_error("WeightField: log-weights must be finite");
  WeightField f;
  f.rows = static_cast<int>(log_w.rows());
  f.cols = static_cast<int>(log_w.cols());
  f.seed = seed;
  f.theta = theta;
  f.log_weights = std::move(log_w);
  return f;
}

WeightField sample_field(double theta, int rows, int cols, std::uint64_t seed, int threads) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw std::domain_error("sample_field: theta must be positive");
  }
  if (rows < 1 || cols < 1) throw std::invalid_argument("sample_field: empty field");
  if (static_cast<std::int64_t>(rows) * cols > kMaxFieldCells) {
    throw std::length_error("sample_field: field exceeds the configured cell limit");
  }
  WeightField f;
  f.rows = rows;
  f.cols = cols;
  f.seed = seed;
  f.theta = theta;
  f.log_weights.resize(rows, cols);
  parallel_for(static_cast<std::size_t>(rows), threads, [&](std::size_t i) {
    for (int j = 0; j < cols; ++j) {
      Xoshiro256 rng(derive_seed(seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
      // w = 1/G, so log w = -log G
      f.log_weights(static_cast<Eigen::Index>(i), j) = -sample_log_gamma(theta, rng);
    }
  });
  return f;
}

double mgf_check(double theta, double t, std::int64_t n_samples, std::uint64_t seed) {
  if (!(theta > 0.0)) throw std::domain_error("mgf_check: theta must be positive");
  if (!(t > -theta)) throw std::domain_error("mgf_check: t must exceed -theta");
  if (n_samples < 1) throw std::invalid_argument("mgf_check: need at least one sample");
  Xoshiro256 rng(derive_seed(seed, {0x4D4746ULL}));
  long double acc = 0.0L;
  for (std::int64_t k = 0; k < n_samples; ++k) {
    acc += std::exp(t * sample_log_gamma(theta, rng));
  }
  return static_cast<double>(acc / static_cast<long double>(n_samples));
}

double max_log_weight_tail(double theta, std::int64_t n, double a, std::int64_t replications,
                           std::uint64_t seed) {
  if (!(theta > 0.0)) throw std::domain_error("max_log_weight_tail: theta must be positive");
  if (!(a > 0.0)) throw std::domain_error("max_log_weight_tail: a must be positive");
  if (n < 1 || replications < 1) throw std::domain_error("max_log_weight_tail: n, replications >= 1");
  const double threshold = (1.0 + a) * std::log(static_cast<double>(n)) / theta;
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < replications; ++r) {
    Xoshiro256 rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    double best = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < n; ++i) {
      best = std::max(best, -sample_log_gamma(theta, rng));
    }
    if (best >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(replications);
}

MomentEstimate neg_log_weight_moments(double theta, std::int64_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("neg_log_weight_moments: need n >= 2");
  Xoshiro256 rng(derive_seed(seed, {0x4D4F4DULL}));
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    const double x = sample_log_gamma(theta, rng);
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  return {mean, m2 / static_cast<double>(n - 1), n};
}

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'G', 'W', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw std::runtime_error("read_field: truncated input");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_field(std::ostream& out, const WeightField& field) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, field.seed);
  put_le<double>(out, field.theta);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.rows));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.cols));
  for (int i = 0; i < field.rows; ++i) {
    for (int j = 0; j < field.cols; ++j) put_le<double>(out, field.log_weights(i, j));
  }
  if (!out) throw std::runtime_error("write_field: stream error");
}

void write_field(const std::filesystem::path& path, const WeightField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_field: cannot open " + path.string());
  write_field(out, field);
}

WeightField read_field(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("read_field: bad magic");
  }
  if (get_le<std::uint32_t>(in) != kVersion) throw std::runtime_error("read_field: unsupported version");
  WeightField f;
  f.seed = get_le<std::uint64_t>(in);
  f.theta = get_le<double>(in);
  const auto rows = get_le<std::uint32_t>(in);
  const auto cols = get_le<std::uint32_t>(in);
  if (rows == 0 || cols == 0 || static_cast<std::int64_t>(rows) * cols > kMaxFieldCells) {
    throw std::runtime_error("read_field: invalid dimensions");
  }
  f.rows = static_cast<int>(rows);
  f.cols = static_cast<int>(cols);
  f.log_weights.resize(f.rows, f.cols);
  for (int i = 0; i < f.rows; ++i) {
    for (int j = 0; j < f.cols; ++j) {
      const double v = get_le<double>(in);
      if (!std::isfinite(v)) throw std::runtime_error("read_field: non-finite log-weight");
      f.log_weights(i, j) = v;
    }
  }
  return f;
}

WeightField read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field: cannot open " + path.string());
  return read_field(in);
}

}  // namespace lgp
