#pragma once

// Standard Brownian bridges used as importance-sampling proposals.
//
// A standard bridge runs from 0 at time 0 to 0 at time T = (N + 1) h with unit
// variance per unit time. Its N interior nodes (per coordinate) are Gaussian
// with covariance Sigma_jk = min(j h, k h) - j k h / (N + 1). A proposal path
// between two observations is the straight line between them plus sigma times
// a standard bridge; by default sigma = gamma.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bbis/geometry.hpp"

namespace bbis {

/// Dense N x N bridge covariance (row-major), per coordinate, sigma = 1.
inline std::vector<double> bridge_covariance(std::size_t n, double h) {
  if (n < 1) throw Error("bridge_covariance: N must be >= 1");
  if (!(h > 0.0)) throw Error("bridge_covariance: h must be positive");
  std::vector<double> s(n * n);
  const double np1 = static_cast<double>(n + 1);
  for (std::size_t j = 1; j <= n; ++j)
    for (std::size_t k = 1; k <= n; ++k) {
      const double jj = static_cast<double>(j);
      const double kk = static_cast<double>(k);
      s[(j - 1) * n + (k - 1)] = std::min(jj * h, kk * h) - jj * kk * h / np1;
    }
  return s;
}

class BridgeEnsemble {
 public:
  BridgeEnsemble(std::size_t m, std::size_t n, double h, std::uint64_t seed)
      : m_(m), n_(n), h_(h), seed_(seed) {
    if (m < 1) throw Error("BridgeEnsemble: M must be >= 1");
    if (n < 1) throw Error("BridgeEnsemble: N must be >= 1");
    if (!(h > 0.0) || !std::isfinite(h)) throw Error("BridgeEnsemble: h must be positive");
    sample();
  }

  std::size_t bridges() const { return m_; }
  std::size_t nodes() const { return n_; }
  double h() const { return h_; }
  double span() const { return h_ * static_cast<double>(n_ + 1); }
  std::uint64_t seed() const { return seed_; }

  /// Interior nodes of bridge k (unit variance).
  std::span<const Point2> bridge(std::size_t k) const {
    return {offsets_.data() + k * n_, n_};
  }

  /// Log-density of bridge k's offsets under the standard (sigma = 1) bridge law.
  double standard_log_density(std::size_t k) const { return log_q_std_[k]; }

 private:
  // Node j given node j-1 and the zero pin at T:
  //   mean = b_{j-1} (T - t_j) / (T - t_{j-1}),  var = h (T - t_j) / (T - t_{j-1}).
  void sample() {
    std::mt19937_64 rng(seed_);
    std::normal_distribution<double> normal(0.0, 1.0);
    offsets_.resize(m_ * n_);
    log_q_std_.resize(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      Point2 prev{};
      double lq = 0.0;
      for (std::size_t j = 1; j <= n_; ++j) {
        const double r = ratio(j);
        const double var = h_ * r;
        const double sd = std::sqrt(var);
        const Point2 mean = r * prev;
        const Point2 z{normal(rng), normal(rng)};
        const Point2 node = mean + sd * z;
        lq += isotropic_gauss2_logpdf(node - mean, var);
        offsets_[k * n_ + (j - 1)] = node;
        prev = node;
      }
      log_q_std_[k] = lq;
    }
  }

  double ratio(std::size_t j) const {
    return static_cast<double>(n_ + 1 - j) / static_cast<double>(n_ + 2 - j);
  }

  std::size_t m_;
  std::size_t n_;
  double h_;
  std::uint64_t seed_;
  std::vector<Point2> offsets_;
  std::vector<double> log_q_std_;
};

inline BridgeEnsemble sample_ensemble(std::size_t m, std::size_t n, double h, std::uint64_t seed) {
  return BridgeEnsemble(m, n, h, seed);
}

/// Log-density of an arbitrary set of N interior offsets under the standard
/// bridge law with sub-step h, via the sequential conditional factorization.
inline double standard_bridge_log_density(std::span<const Point2> offsets, double h) {
  const std::size_t n = offsets.size();
  Point2 prev{};
  double lq = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double r = static_cast<double>(n + 1 - j) / static_cast<double>(n + 2 - j);
    lq += isotropic_gauss2_logpdf(offsets[j - 1] - r * prev, h * r);
    prev = offsets[j - 1];
  }
  return lq;
}

/// Interior nodes ((N+1-k) x_start + k x_end) / (N+1) + sigma B_k, k = 1..N,
/// for an explicit set of standard-bridge offsets B.
inline std::vector<Point2> interpolate_bridge(std::span<const Point2> offsets, Point2 x_start,
                                              Point2 x_end, double sigma) {
  const std::size_t n = offsets.size();
  const double np1 = static_cast<double>(n + 1);
  std::vector<Point2> path(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double w = static_cast<double>(k) / np1;
    path[k - 1] = (1.0 - w) * x_start + w * x_end + sigma * offsets[k - 1];
  }
  return path;
}

inline std::vector<Point2> scale_bridge(const BridgeEnsemble& e, std::size_t j, Point2 x_start,
                                        Point2 x_end, double sigma) {
  if (j >= e.bridges()) throw Error("scale_bridge: bridge index out of range");
  if (!(sigma > 0.0)) throw Error("scale_bridge: scale must be positive");
  return interpolate_bridge(e.bridge(j), x_start, x_end, sigma);
}

/// Log-density of bridge j scaled by sigma, under the proposal with covariance
/// sigma^2 Sigma per coordinate. The linear scaling contributes -2N log sigma.
inline double proposal_log_density(const BridgeEnsemble& e, std::size_t j, double sigma) {
  if (j >= e.bridges()) throw Error("proposal_log_density: bridge index out of range");
  if (!(sigma > 0.0)) throw Error("proposal_log_density: scale must be positive");
  return e.standard_log_density(j) - 2.0 * static_cast<double>(e.nodes()) * std::log(sigma);
}

}  // namespace bbis
