#include "lgpolymer/honeycomb.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <type_traits>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "lgpolymer/rng.hpp"

namespace lgp {

TriangularOperator::TriangularOperator(const WeightField& field) : n_(field.rows) {
  if (!field.is_square()) throw std::invalid_argument("TriangularOperator: field must be square");
  inv_weight_.resize(size());
  weight_.resize(static_cast<std::size_t>(size()));
  for (int x = 1; x <= n_; ++x) {
    for (int y = 1; y <= n_; ++y) {
      const int i = index({x, y});
      const long double lw = field.log_weight(x, y);
      inv_weight_[i] = static_cast<double>(std::exp(-lw));
      weight_[static_cast<std::size_t>(i)] = std::exp(lw);
    }
  }
}

template <typename Scalar>
Scalar TriangularOperator::diagonal_entry(int i) const {
  if constexpr (std::is_same_v<Scalar, double>) {
    return inv_weight_[i];
  } else {
    return Scalar(1) / static_cast<Scalar>(weight_[static_cast<std::size_t>(i)]);
  }
}

template <typename Scalar>
TriangularOperator::Vector<Scalar> TriangularOperator::apply(const Vector<Scalar>& v) const {
  Vector<Scalar> out(size());
  for (int i = 0; i < size(); ++i) {
    Scalar acc = diagonal_entry<Scalar>(i) * v[i];
    if (i >= n_) acc += v[i - n_];       // (x-1, y)
    if (i % n_ != 0) acc += v[i - 1];    // (x, y-1)
    out[i] = acc;
  }
  return out;
}

template <typename Scalar>
TriangularOperator::Vector<Scalar> TriangularOperator::apply_transpose(const Vector<Scalar>& v) const {
  Vector<Scalar> out(size());
  for (int i = 0; i < size(); ++i) {
    Scalar acc = diagonal_entry<Scalar>(i) * v[i];
    if (i + n_ < size()) acc += v[i + n_];   // (x+1, y)
    if ((i + 1) % n_ != 0) acc += v[i + 1];  // (x, y+1)
    out[i] = acc;
  }
  return out;
}

template <typename Scalar>
TriangularOperator::Vector<Scalar> TriangularOperator::solve(const Vector<Scalar>& b) const {
  Vector<Scalar> x(size());
  for (int i = 0; i < size(); ++i) {
    Scalar r = b[i];
    if (i >= n_) r -= x[i - n_];
    if (i % n_ != 0) r -= x[i - 1];
    x[i] = static_cast<Scalar>(weight_[static_cast<std::size_t>(i)]) * r;
  }
  return x;
}

template <typename Scalar>
TriangularOperator::Vector<Scalar> TriangularOperator::solve_transpose(const Vector<Scalar>& b) const {
  Vector<Scalar> x(size());
  for (int i = size() - 1; i >= 0; --i) {
    Scalar r = b[i];
    if (i + n_ < size()) r -= x[i + n_];
    if ((i + 1) % n_ != 0) r -= x[i + 1];
    x[i] = static_cast<Scalar>(weight_[static_cast<std::size_t>(i)]) * r;
  }
  return x;
}

#define LGP_INSTANTIATE(Scalar)                                                                      \
  template TriangularOperator::Vector<Scalar> TriangularOperator::apply(const Vector<Scalar>&) const; \
  template TriangularOperator::Vector<Scalar> TriangularOperator::apply_transpose(const Vector<Scalar>&) const; \
  template TriangularOperator::Vector<Scalar> TriangularOperator::solve(const Vector<Scalar>&) const; \
  template TriangularOperator::Vector<Scalar> TriangularOperator::solve_transpose(const Vector<Scalar>&) const;
LGP_INSTANTIATE(double)
LGP_INSTANTIATE(long double)
#undef LGP_INSTANTIATE

Eigen::MatrixXd TriangularOperator::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < size(); ++i) {
    a(i, i) = inv_weight_[i];
    if (i >= n_) a(i, i - n_) = 1.0;
    if (i % n_ != 0) a(i, i - 1) = 1.0;
  }
  return a;
}

TriangularOperator build_operator(const WeightField& field) { return TriangularOperator(field); }

Eigen::MatrixXd bipartite_matrix(const WeightField& field) {
  const TriangularOperator op(field);
  const Eigen::MatrixXd a = op.dense();
  const int m = op.size();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  full.topRightCorner(m, m) = a;
  full.bottomLeftCorner(m, m) = a.transpose();
  return full;
}

InverseEntryCheck inverse_entry_check(const WeightField& field, LatticePoint s, LatticePoint t,
                                      const InverseCheckOptions& options) {
  if (!field.is_square()) throw std::invalid_argument("inverse_entry_check: field must be square");
  if (field.rows > options.max_n) throw std::length_error("inverse_entry_check: N above the guarded limit");
  if (field.theta < options.min_theta) throw std::domain_error("inverse_entry_check: theta below the guarded limit");
  if (!field.contains(s.x, s.y) || !field.contains(t.x, t.y)) {
    throw std::out_of_range("inverse_entry_check: point outside the field");
  }
  const TriangularOperator op(field);
  InverseEntryCheck out;
  if (precedes(s, t)) {
    const double log_z = log_partition(field, s, t);
    if (std::abs(log_z) > 600.0) throw std::range_error("inverse_entry_check: |log Z| exceeds double range guard");
    const int parity = (t.x - s.x + t.y - s.y) % 2;
    out.rhs = (parity == 0 ? 1.0 : -1.0) * std::exp(log_z);
  }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(op.size());
  e[op.index(s)] = 1.0;
  out.lhs = op.solve<double>(e)[op.index(t)];
  if (out.rhs == 0.0) {
    out.ok = std::abs(out.lhs) <= options.abs_tol_zero;
  } else {
    out.ok = std::abs(out.lhs - out.rhs) <= options.rel_tol * std::abs(out.rhs);
  }
  return out;
}

namespace {

template <typename Scalar>
void power_iterate(const TriangularOperator& op, std::uint64_t seed, const SpectralOptions& options,
                   SpectralResult& result) {
  using Vec = TriangularOperator::Vector<Scalar>;
  Xoshiro256 rng(seed);
  std::normal_distribution<double> normal;
  Vec v(op.size());
  for (int i = 0; i < op.size(); ++i) v[i] = static_cast<Scalar>(normal(rng));
  v /= v.norm();

  double prev = -std::numeric_limits<double>::infinity();
  double estimate = prev;
  double residual = std::numeric_limits<double>::infinity();
  long it = 0;
  bool converged = false;
  while (it < options.max_iterations) {
    ++it;
    Vec u = op.solve<Scalar>(v);
    const Scalar nu = u.stableNorm();
    u /= nu;
    Vec y = op.solve_transpose<Scalar>(u);
    const Scalar ny = y.stableNorm();
    y /= ny;
    // Rayleigh quotient of A^-T A^-1 at unit v is nu^2.
    estimate = static_cast<double>(std::log(nu));
    residual = static_cast<double>((y * (ny / nu) - v).stableNorm());
    v = y;
    if (std::abs(estimate - prev) < options.tolerance) {
      converged = true;
      break;
    }
    prev = estimate;
  }
  result.neg_log_lambda1 = estimate;
  result.iterations = it;
  result.residual = residual;
  result.converged = converged;
}

// log sigma_max(A^-1) from a dense SVD of the inverse assembled from
// partition functions scaled by exp(-F_N).
double dense_inverse_log_sigma(const WeightField& field, double f_n) {
  const int n = field.rows;
  const int m = n * n;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  for (int sx = 1; sx <= n; ++sx) {
    for (int sy = 1; sy <= n; ++sy) {
      const LogZGrid g = log_partition_grid(field, {sx, sy});
      for (int tx = sx; tx <= n; ++tx) {
        for (int ty = sy; ty <= n; ++ty) {
          const double sign = ((tx - sx + ty - sy) % 2 == 0) ? 1.0 : -1.0;
          b((tx - 1) * n + ty - 1, (sx - 1) * n + sy - 1) = sign * std::exp(g.values(tx - 1, ty - 1) - f_n);
        }
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  return f_n + std::log(svd.singularValues()[0]);
}

}  // namespace

SpectralResult neg_log_lambda1(const WeightField& field, const SpectralOptions& options) {
  if (!field.is_square()) throw std::invalid_argument("neg_log_lambda1: field must be square");
  const int n = field.rows;
  SpectralResult result;
  result.f_n = max_free_energy_exact(field).value;
  const TriangularOperator op(field);
  const std::uint64_t seed = field.seed + 0x5EEDULL;
  // Entries of intermediate solves are bounded by N^2 exp(F_N + 4 log N).
  const double headroom = result.f_n + 6.0 * std::log(static_cast<double>(n)) + 20.0;
  if (headroom < 700.0) {
    power_iterate<double>(op, seed, options, result);
  } else if (headroom < 11000.0) {
    power_iterate<long double>(op, seed, options, result);
  } else {
    throw std::range_error("neg_log_lambda1: F_N beyond extended floating-point range");
  }
  if (n <= options.dense_check_max_n) {
    result.dense_neg_log_lambda1 = dense_inverse_log_sigma(field, result.f_n);
  }
  const double upper = result.f_n + 4.0 * std::log(static_cast<double>(n));
  result.sandwich_ok = result.neg_log_lambda1 >= result.f_n - options.sandwich_tolerance &&
                       result.neg_log_lambda1 <= upper + options.sandwich_tolerance;
  return result;
}

Eigen::VectorXd spectrum_small(const WeightField& field, int max_n) {
  if (!field.is_square()) throw std::invalid_argument("spectrum_small: field must be square");
  if (field.rows > max_n) throw std::length_error("spectrum_small: N above the dense limit");
  const TriangularOperator op(field);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.dense());
  Eigen::VectorXd s = svd.singularValues();
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace lgp
