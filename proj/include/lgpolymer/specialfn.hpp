#pragma once

// Digamma / polygamma evaluation and the scale functions of the log-gamma
// polymer (critical point, g, g^-1, h, sigma). Everything here is a pure
// function of its arguments.

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lgp {

namespace detail {

// B_{2k} for k = 1..8
inline constexpr long double kBernoulliEven[] = {
    1.0L / 6.0L,   -1.0L / 30.0L,  1.0L / 42.0L,  -1.0L / 30.0L,
    5.0L / 66.0L,  -691.0L / 2730.0L, 7.0L / 6.0L, -3617.0L / 510.0L};

template <std::floating_point Real>
void require_positive_finite(Real z, const char* who) {
  if (!(z > Real(0)) || !std::isfinite(z)) {
    throw std::domain_error(std::string(who) + ": argument must be positive and finite");
  }
}

// Shift threshold for the asymptotic expansions.
inline constexpr long double kAsymptoticStart = 12.0L;

}  // namespace detail

/// Digamma function Psi(z) = Gamma'(z)/Gamma(z) for z > 0.
///
/// Recurrence Psi(z) = Psi(z+1) - 1/z moves the argument past 12, where the
/// Stirling-type expansion with eight Bernoulli terms is accurate to well
/// below 1e-15.
template <std::floating_point Real>
Real digamma(Real z) {
  detail::require_positive_finite(z, "digamma");
  long double x = z;
  long double shift = 0.0L;
  while (x < detail::kAsymptoticStart) {
    shift -= 1.0L / x;
    x += 1.0L;
  }
  const long double inv2 = 1.0L / (x * x);
  long double series = 0.0L;
  long double p = inv2;
  for (int k = 1; k <= 8; ++k) {
    series += detail::kBernoulliEven[k - 1] / (2.0L * k) * p;
    p *= inv2;
  }
  return static_cast<Real>(shift + std::log(x) - 0.5L / x - series);
}

/// Polygamma of order 1 (trigamma) or 2 (tetragamma).
template <std::floating_point Real>
Real polygamma(int order, Real z) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("polygamma: only orders 1 and 2 are supported");
  }
  detail::require_positive_finite(z, "polygamma");
  long double x = z;
  long double shift = 0.0L;
  while (x < detail::kAsymptoticStart) {
    shift += order == 1 ? 1.0L / (x * x) : -2.0L / (x * x * x);
    x += 1.0L;
  }
  const long double inv = 1.0L / x;
  const long double inv2 = inv * inv;
  long double value = 0.0L;
  if (order == 1) {
    // 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
    value = inv + 0.5L * inv2;
    long double p = inv2 * inv;
    for (int k = 1; k <= 8; ++k) {
      value += detail::kBernoulliEven[k - 1] * p;
      p *= inv2;
    }
  } else {
    // -1/x^2 - 1/x^3 - sum (2k+1) B_2k / x^(2k+2)
    value = -inv2 - inv2 * inv;
    long double p = inv2 * inv2;
    for (int k = 1; k <= 8; ++k) {
      value -= (2.0L * k + 1.0L) * detail::kBernoulliEven[k - 1] * p;
      p *= inv2;
    }
  }
  return static_cast<Real>(shift + value);
}

inline double digamma(double z) { return digamma<double>(z); }
inline double trigamma(double z) { return polygamma<double>(1, z); }
inline double tetragamma(double z) { return polygamma<double>(2, z); }

namespace detail {

/// Bisection for the root of an increasing function on [lo, hi].
/// Stops at bracket width `width` or after `max_iter` halvings.
template <typename F>
double bisect_increasing(F&& f, double lo, double hi, double width = 1e-14,
                         int max_iter = 200) {
  for (int it = 0; it < max_iter && hi - lo > width; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Twice the unique zero of the digamma function (approximately 2.92326).
inline double critical_theta() {
  static const double value =
      2.0 * detail::bisect_increasing([](double z) { return digamma(z); }, 1.0, 2.0, 1e-15);
  return value;
}

/// Shape parameter together with the constants derived from it.
struct PolymerParams {
  double theta;
  double theta_c;
  double psi_half_theta;  // Psi(theta/2)
  double sigma_theta;     // (-Psi''(theta/2))^(1/3)

  explicit PolymerParams(double shape)
      : theta(shape),
        theta_c(critical_theta()),
        psi_half_theta(0.0),
        sigma_theta(0.0) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
      throw std::domain_error("PolymerParams: theta must be positive");
    }
    psi_half_theta = digamma(theta / 2.0);
    sigma_theta = std::cbrt(-tetragamma(theta / 2.0));
  }

  /// Subcritical (theta < theta_c), critical, or supercritical.
  int phase() const {
    if (theta < theta_c) return -1;
    if (theta > theta_c) return 1;
    return 0;
  }
};

/// g_theta(z) = Psi'(theta - z) / Psi'(z) on (0, theta), its inverse, and the
/// law-of-large-numbers / fluctuation functions built from it.
class ScaleFunctions {
 public:
  explicit ScaleFunctions(double theta) : theta_(theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
      throw std::domain_error("ScaleFunctions: theta must be positive");
    }
  }

  double theta() const { return theta_; }

  double g(double z) const {
    if (!(z > 0.0 && z < theta_)) {
      throw std::domain_error("g: argument must lie in (0, theta)");
    }
    return trigamma(theta_ - z) / trigamma(z);
  }

  /// Inverse of g by bisection. The bracket starts at (eps*theta, (1-eps)*theta)
  /// with eps = 1e-9 and is pushed toward the endpoint when x falls outside
  /// g's range on it.
  double g_inverse(double x) const {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::domain_error("g_inverse: argument must be positive and finite");
    }
    double eps = 1e-9;
    double lo = eps * theta_;
    double hi = (1.0 - eps) * theta_;
    while (g(lo) > x && eps > 1e-300) {
      eps *= 1e-6;
      lo = eps * theta_;
    }
    double eps_hi = 1e-9;
    while (g(hi) < x && eps_hi > 1e-15) {
      eps_hi *= 1e-2;
      hi = (1.0 - eps_hi) * theta_;
    }
    if (g(lo) > x || g(hi) < x) {
      throw std::domain_error("g_inverse: argument outside representable range");
    }
    // Relative width near 0 matters when the root is tiny.
    const double width = std::max(1e-15 * theta_, 1e-3 * lo);
    return detail::bisect_increasing([&](double z) { return g(z) - x; }, lo, hi,
                                     std::min(width, 1e-14), 400);
  }

  /// h(x) = x Psi(g^-1(x)) + Psi(theta - g^-1(x)).
  double h(double x) const {
    const double z = g_inverse(x);
    return x * digamma(z) + digamma(theta_ - z);
  }

  /// h'(x) = Psi(g^-1(x)).
  double h_prime(double x) const { return digamma(g_inverse(x)); }

  /// sigma_theta(x); at x = 1 it reduces to (-Psi''(theta/2))^(1/3).
  double sigma_x(double x) const {
    const double z = g_inverse(x);
    const double s = -0.5 * x * tetragamma(z) - 0.5 * tetragamma(theta_ - z);
    return std::cbrt(s);
  }

 private:
  double theta_;
};

}  // namespace lgp
