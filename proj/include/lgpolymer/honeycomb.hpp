#pragma once

// The off-diagonal block of the honeycomb adjacency operator,
//   (A f)(x, y) = f(x-1, y) + f(x, y-1) + f(x, y) / w(x, y),
// acting on functions on [1, N]^2. Sites are ordered x-major,
// (x, y) -> (x-1) N + (y-1), so every predecessor has a smaller index and the
// matrix is lower triangular with diagonal 1/w.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "lgpolymer/polymer.hpp"
#include "lgpolymer/sampler.hpp"

namespace lgp {

class TriangularOperator {
 public:
  explicit TriangularOperator(const WeightField& field);

  int side() const { return n_; }
  int size() const { return n_ * n_; }
  int index(LatticePoint p) const { return (p.x - 1) * n_ + (p.y - 1); }
  LatticePoint site(int idx) const { return {idx / n_ + 1, idx % n_ + 1}; }

  /// 1/w at every site, in site order.
  const Eigen::VectorXd& diagonal() const { return inv_weight_; }

  template <typename Scalar>
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  template <typename Scalar>
  Vector<Scalar> apply(const Vector<Scalar>& v) const;
  template <typename Scalar>
  Vector<Scalar> apply_transpose(const Vector<Scalar>& v) const;
  /// Solves A x = b by forward substitution in site order.
  template <typename Scalar>
  Vector<Scalar> solve(const Vector<Scalar>& b) const;
  /// Solves A^T x = b by backward substitution.
  template <typename Scalar>
  Vector<Scalar> solve_transpose(const Vector<Scalar>& b) const;

  /// Dense N^2 x N^2 matrix; intended for small N only.
  Eigen::MatrixXd dense() const;

 private:
  template <typename Scalar>
  Scalar diagonal_entry(int i) const;

  int n_;
  Eigen::VectorXd inv_weight_;
  std::vector<long double> weight_;  // w itself, for the substitutions
};

TriangularOperator build_operator(const WeightField& field);

/// The full bipartite matrix [[0, A], [A^T, 0]] of size 2N^2 (small N only).
Eigen::MatrixXd bipartite_matrix(const WeightField& field);

struct InverseEntryCheck {
  double lhs = 0.0;  // (A^-1)_{T,S} from a forward solve
  double rhs = 0.0;  // (-1)^{|T-S|_1} Z(S;T), or 0 when S is not <= T
  bool ok = false;
};

struct InverseCheckOptions {
  int max_n = 8;
  double min_theta = 1.0;
  double rel_tol = 1e-8;
  double abs_tol_zero = 1e-12;
};

/// Compares one entry of A^-1 against the signed partition function.
InverseEntryCheck inverse_entry_check(const WeightField& field, LatticePoint s, LatticePoint t,
                                      const InverseCheckOptions& options = {});

struct SpectralOptions {
  double tolerance = 1e-9;      // on successive log-Rayleigh estimates
  long max_iterations = 100000;
  int dense_check_max_n = 12;   // dense SVD of the inverse up to this N
  double sandwich_tolerance = 1e-6;
};

struct SpectralResult {
  double neg_log_lambda1 = 0.0;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool sandwich_ok = false;
  double f_n = 0.0;
  std::optional<double> dense_neg_log_lambda1;
};

/// -log of the smallest positive eigenvalue of the bipartite operator, i.e.
/// log sigma_max(A^-1), by power iteration on A^-T A^-1 using the two
/// triangular solves. The iterate is renormalised each step and only the log
/// of its norm is kept; long double is used when exp(F_N) leaves double range.
SpectralResult neg_log_lambda1(const WeightField& field, const SpectralOptions& options = {});

/// All N^2 singular values of A (the positive eigenvalues of the bipartite
/// operator), ascending. Dense; N <= 12.
Eigen::VectorXd spectrum_small(const WeightField& field, int max_n = 12);

}  // namespace lgp
