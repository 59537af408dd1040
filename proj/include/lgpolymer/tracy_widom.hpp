#pragma once

// GUE Tracy-Widom distribution as the Fredholm determinant det(I - K_Ai) on
// (x, inf), discretised with a Gauss-Legendre rule, plus Kolmogorov-Smirnov
// distances used to compare Monte Carlo samples against it.

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace lgp {

struct AiryValues {
  double ai;
  double ai_prime;
};

/// Ai and Ai'. Power series on [-2, 2]; Taylor steps from tabulated anchors
/// on (-12, -2) and (2, 12); asymptotic expansions beyond.
AiryValues airy(double x);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order);

class TracyWidomGue {
 public:
  /// `cutoff` is the length added past max(x, 0) where the kernel is truncated.
  explicit TracyWidomGue(int order = 60, double cutoff = 16.0);

  int order() const { return order_; }
  double cutoff() const { return cutoff_; }

  /// F_GUE(x).
  double cdf(double x) const;
  /// 1 - F_GUE(x), computed without cancellation from log det = sum log(1 - mu_i).
  double upper_tail(double x) const;

 private:
  // sum_i log(1 - mu_i) over eigenvalues of the symmetrised discretised kernel
  double log_det(double x) const;

  int order_;
  double cutoff_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Fits -log(1 - F(x)) = c x^p + lambda log(x + 1) + b over [x_lo, x_hi];
/// p by golden-section search on the residual sum of squares, the linear
/// coefficients by least squares at each trial p.
struct TailFit {
  double exponent;
  double coefficient;
  double log_coefficient;  // lambda
  double intercept;
  double rss;
};
TailFit fit_upper_tail(const TracyWidomGue& tw, double x_lo, double x_hi, int points = 26);

/// Least-squares slope of log(-log(1 - F(x))) against log x.
double loglog_tail_slope(const TracyWidomGue& tw, double x_lo, double x_hi, int points = 26);

/// sup_x |F_n(x) - F(x)| for the empirical CDF of `sorted_samples`.
double ks_distance(std::span<const double> sorted_samples, const std::function<double(double)>& cdf);

/// Two-sample statistic sup_x |F_n(x) - G_m(x)|; inputs need not be sorted.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample rejection threshold c(alpha) sqrt((n+m)/(nm)).
double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha);

}  // namespace lgp
