#pragma once

// Exact transition densities for the two tractable special cases of the
// Langevin model: zero drift (Brownian motion) and a single squared-distance
// covariate with negative coefficient (isotropic Ornstein-Uhlenbeck).

#include <cmath>

#include "bbis/geometry.hpp"

namespace bbis {

/// dX = -theta (X - center) dt + gamma dW.
struct OUParams {
  double theta = 0.5;
  Point2 center{};
  double gamma_sq = 5.0;

  /// Quadratic-only Langevin model with coefficient beta (< 0): theta = -gamma^2 beta.
  static OUParams from_quadratic(double beta, Point2 center, double gamma_sq) {
    if (!(beta < 0.0)) throw Error("OUParams: mean reversion requires a negative coefficient");
    return {-gamma_sq * beta, center, gamma_sq};
  }

  double stationary_variance() const { return gamma_sq / (2.0 * theta); }
};

inline double bm_transition_logdensity(double gamma_sq, Point2 y, Point2 x, double dt) {
  if (!(dt > 0.0)) throw Error("bm_transition_logdensity: dt must be positive");
  return isotropic_gauss2_logpdf(x - y, gamma_sq * dt);
}

inline Point2 ou_transition_mean(const OUParams& p, Point2 y, double dt) {
  return p.center + std::exp(-p.theta * dt) * (y - p.center);
}

/// Per-coordinate variance (gamma^2 / (2 theta)) (1 - exp(-2 theta dt)).
inline double ou_transition_variance(const OUParams& p, double dt) {
  return p.gamma_sq / (2.0 * p.theta) * -std::expm1(-2.0 * p.theta * dt);
}

inline double ou_transition_logdensity(const OUParams& p, Point2 y, Point2 x, double dt) {
  if (!(dt > 0.0)) throw Error("ou_transition_logdensity: dt must be positive");
  if (!(p.theta > 0.0)) throw Error("ou_transition_logdensity: theta must be positive");
  return isotropic_gauss2_logpdf(x - ou_transition_mean(p, y, dt), ou_transition_variance(p, dt));
}

}  // namespace bbis
