#include "lgpolymer/tracy_widom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace lgp {

namespace {

constexpr double kAi0 = 0.355028053887817239260;   // Ai(0)
constexpr double kAip0 = 0.258819403792806798405;  // -Ai'(0)

AiryValues airy_series(double x) {
  const double x3 = x * x * x;
  // f = sum t_k, g = sum u_k, f' = sum a_k, g' = sum b_k
  double t = 1.0, u = x, a = 0.5 * x * x, b = 1.0;
  double f = t, g = u, fp = a, gp = b;
  for (int k = 1; k < 200; ++k) {
    const double k3 = 3.0 * k;
    t *= x3 / ((k3 - 1.0) * k3);
    u *= x3 / (k3 * (k3 + 1.0));
    a *= x3 / ((k3 + 2.0) * k3);
    b *= x3 / (k3 * (k3 - 2.0));
    f += t;
    g += u;
    fp += a;
    gp += b;
    const double scale = std::abs(f) + std::abs(g) + std::abs(fp) + std::abs(gp);
    if (std::abs(t) + std::abs(u) + std::abs(a) + std::abs(b) < 1e-18 * scale) break;
  }
  return {kAi0 * f - kAip0 * g, kAi0 * fp - kAip0 * gp};
}

// Coefficients u_k, v_k of the asymptotic expansions.
struct AsymptoticCoefficients {
  std::vector<double> u, v;
  AsymptoticCoefficients() {
    u.push_back(1.0);
    v.push_back(1.0);
    for (int k = 1; k <= 40; ++k) {
      const double uk = u.back() * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) /
                        ((2.0 * k - 1.0) * 216.0 * k);
      u.push_back(uk);
      v.push_back(-(6.0 * k + 1.0) / (6.0 * k - 1.0) * uk);
    }
  }
};

const AsymptoticCoefficients& coefficients() {
  static const AsymptoticCoefficients c;
  return c;
}

AiryValues airy_decaying(double x) {
  const auto& c = coefficients();
  const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
  double su = 0.0, sv = 0.0, p = 1.0, last = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < c.u.size(); ++k) {
    const double term = c.u[k] * p;
    if (std::abs(term) > last) break;  // optimal truncation
    last = std::abs(term);
    su += term;
    sv += c.v[k] * p;
    p *= -1.0 / zeta;
  }
  const double e = std::exp(-zeta) / (2.0 * std::sqrt(std::numbers::pi));
  const double q = std::sqrt(std::sqrt(x));
  return {e / q * su, -e * q * sv};
}

AiryValues airy_oscillating(double x) {
  const auto& c = coefficients();
  const double z = -x;
  const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
  double ue = 0.0, uo = 0.0, ve = 0.0, vo = 0.0, p = 1.0, last = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < c.u.size(); ++k) {
    const double term = c.u[k] * p;
    if (std::abs(term) > last) break;
    last = std::abs(term);
    const double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;
    if (k % 2 == 0) {
      ue += sign * term;
      ve += sign * c.v[k] * p;
    } else {
      uo += sign * term;
      vo += sign * c.v[k] * p;
    }
    p /= zeta;
  }
  const double phase = zeta + std::numbers::pi / 4.0;
  const double s = std::sin(phase), co = std::cos(phase);
  const double q = std::sqrt(std::sqrt(z));
  const double rp = 1.0 / std::sqrt(std::numbers::pi);
  return {rp / q * (s * ue - co * uo), -rp * q * (co * ve + s * vo)};
}

// One Taylor step of y'' = t y from t0 to t0 + h.
AiryValues taylor_step(double t0, AiryValues y, double h) {
  double a_km1 = y.ai, a_k = y.ai_prime;  // a_0, a_1
  double a_prev2 = 0.0;                   // a_{k-2}
  double value = a_km1 + a_k * h, slope = a_k;
  double hp = h;  // h^(k)
  // a_{k+1} = (t0 a_{k-1} + a_{k-2}) / ((k+1) k)
  for (int k = 1; k < 80; ++k) {
    const double next = (t0 * a_km1 + a_prev2) / ((k + 1.0) * k);
    slope += (k + 1.0) * next * hp;
    hp *= h;
    value += next * hp;
    a_prev2 = a_km1;
    a_km1 = a_k;
    a_k = next;
    if (std::abs(next * hp) < 1e-18 * std::abs(value) && std::abs(a_km1 * hp) < 1e-18 * std::abs(value)) break;
  }
  return {value, slope};
}

constexpr double kAnchorStep = 0.25;

// Ai, Ai' at from + i * step, i = 0..count-1, by Taylor steps from `start`.
std::vector<AiryValues> anchor_table(double from, double step, int count, AiryValues start) {
  std::vector<AiryValues> t(static_cast<std::size_t>(count));
  t[0] = start;
  for (int i = 1; i < count; ++i) {
    t[static_cast<std::size_t>(i)] = taylor_step(from + (i - 1) * step, t[static_cast<std::size_t>(i - 1)], step);
  }
  return t;
}

// (2, 12): integrated backward from the asymptotic value at 12, the direction
// in which Ai grows. (-12, -2): integrated forward from the series at -2.
const std::vector<AiryValues>& right_anchors() {
  static const auto t = anchor_table(12.0, -kAnchorStep, 41, airy_decaying(12.0));
  return t;
}
const std::vector<AiryValues>& left_anchors() {
  static const auto t = anchor_table(-2.0, -kAnchorStep, 41, airy_series(-2.0));
  return t;
}

AiryValues from_table(const std::vector<AiryValues>& t, double from, double x) {
  const auto i = static_cast<std::size_t>(std::floor((from - x) / kAnchorStep));
  const double base = from - static_cast<double>(i) * kAnchorStep;
  return taylor_step(base, t[i], x - base);
}

}  // namespace

AiryValues airy(double x) {
  if (!std::isfinite(x)) throw std::domain_error("airy: non-finite argument");
  if (x >= 12.0) return airy_decaying(x);
  if (x > 2.0) return from_table(right_anchors(), 12.0, x);
  if (x >= -2.0) return airy_series(x);
  if (x > -12.0) return from_table(left_anchors(), -2.0, x);
  return airy_oscillating(x);
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  std::vector<double> x(static_cast<std::size_t>(order)), w(static_cast<std::size_t>(order));
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = order * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= order; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = order * (z * p0 - p1) / (z * z - 1.0);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(order - 1 - i);
    x[lo] = -z;
    x[hi] = z;
    w[lo] = w[hi] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

TracyWidomGue::TracyWidomGue(int order, double cutoff) : order_(order), cutoff_(cutoff) {
  if (order < 4) throw std::invalid_argument("TracyWidomGue: order must be at least 4");
  if (!(cutoff > 0.0)) throw std::invalid_argument("TracyWidomGue: cutoff must be positive");
  std::tie(nodes_, weights_) = gauss_legendre(order);
}

double TracyWidomGue::log_det(double x) const {
  if (!std::isfinite(x)) throw std::domain_error("TracyWidomGue: non-finite argument");
  const double lo = x;
  const double hi = std::max(x, 0.0) + cutoff_;
  const double half = 0.5 * (hi - lo);
  const int m = order_;
  Eigen::VectorXd t(m), sw(m), ai(m), aip(m);
  for (int i = 0; i < m; ++i) {
    t[i] = lo + half * (nodes_[static_cast<std::size_t>(i)] + 1.0);
    sw[i] = std::sqrt(half * weights_[static_cast<std::size_t>(i)]);
    const AiryValues a = airy(t[i]);
    ai[i] = a.ai;
    aip[i] = a.ai_prime;
  }
  Eigen::MatrixXd k(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double kij;
      if (i == j) {
        kij = aip[i] * aip[i] - t[i] * ai[i] * ai[i];
      } else {
        kij = (ai[i] * aip[j] - aip[i] * ai[j]) / (t[i] - t[j]);
      }
      k(i, j) = sw[i] * kij * sw[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double mu = eig.eigenvalues()[i];
    if (mu >= 1.0) return -std::numeric_limits<double>::infinity();
    acc += std::log1p(-mu);
  }
  return acc;
}

double TracyWidomGue::cdf(double x) const {
  return std::clamp(std::exp(log_det(x)), 0.0, 1.0);
}

double TracyWidomGue::upper_tail(double x) const {
  return std::clamp(-std::expm1(log_det(x)), 0.0, 1.0);
}

namespace {

std::vector<double> grid(double lo, double hi, int points) {
  if (points < 3 || !(hi > lo)) throw std::invalid_argument("tail fit: need at least 3 points on a proper interval");
  std::vector<double> xs(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return xs;
}

}  // namespace

TailFit fit_upper_tail(const TracyWidomGue& tw, double x_lo, double x_hi, int points) {
  const auto xs = grid(x_lo, x_hi, points);
  Eigen::VectorXd y(points);
  for (int i = 0; i < points; ++i) y[i] = -std::log(tw.upper_tail(xs[static_cast<std::size_t>(i)]));

  auto solve = [&](double p, TailFit& fit) {
    Eigen::MatrixXd a(points, 3);
    for (int i = 0; i < points; ++i) {
      const double x = xs[static_cast<std::size_t>(i)];
      a(i, 0) = std::pow(x, p);
      a(i, 1) = std::log(x + 1.0);
      a(i, 2) = 1.0;
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
    fit = {p, c[0], c[1], c[2], (a * c - y).squaredNorm()};
    return fit.rss;
  };

  // golden-section search on p in [1, 2]
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 1.0, b = 2.0;
  TailFit f1{}, f2{};
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double r1 = solve(c, f1), r2 = solve(d, f2);
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    if (r1 < r2) {
      b = d;
      d = c;
      r2 = r1;
      f2 = f1;
      c = b - phi * (b - a);
      r1 = solve(c, f1);
    } else {
      a = c;
      c = d;
      r1 = r2;
      f1 = f2;
      d = a + phi * (b - a);
      r2 = solve(d, f2);
    }
  }
  return r1 < r2 ? f1 : f2;
}

double loglog_tail_slope(const TracyWidomGue& tw, double x_lo, double x_hi, int points) {
  const auto xs = grid(x_lo, x_hi, points);
  Eigen::MatrixXd a(points, 2);
  Eigen::VectorXd y(points);
  for (int i = 0; i < points; ++i) {
    const double x = xs[static_cast<std::size_t>(i)];
    a(i, 0) = std::log(x);
    a(i, 1) = 1.0;
    y[i] = std::log(-std::log(tw.upper_tail(x)));
  }
  return a.colPivHouseholderQr().solve(y)[0];
}

double ks_distance(std::span<const double> sorted_samples, const std::function<double(double)>& cdf) {
  if (sorted_samples.empty()) throw std::invalid_argument("ks_distance: empty sample");
  const double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = cdf(sorted_samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0 || !(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("ks_two_sample_critical: invalid arguments");
  }
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  return c * std::sqrt((nd + md) / (nd * md));
}

}  // namespace lgp
