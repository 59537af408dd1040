#pragma once

#include <cmath>
#include <random>
#include <stdexcept>

namespace lgp {

template <typename Urbg>
double sample_log_gamma(double theta, Urbg& rng) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw std::domain_error("sample_log_gamma: theta must be positive");
  }
  if (theta >= 1.0) {
    std::gamma_distribution<double> dist(theta, 1.0);
    return std::log(dist(rng));
  }
  // G_theta = G_{theta+1} * U^(1/theta)
  std::gamma_distribution<double> dist(theta + 1.0, 1.0);
  const double g = dist(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return std::log(g) + std::log(u) / theta;
}

}  // namespace lgp
