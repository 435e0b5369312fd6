#pragma once

// Transition densities and track log-likelihoods for the Langevin model.
//
// Euler-Maruyama:  x | y ~ N(y + (gamma^2 dt / 2) grad log pi(y), gamma^2 dt I)
//
// Brownian-bridge importance sampling (BBIS): split an observation gap into
// N + 1 sub-steps of size h, propose the N interior nodes as the straight line
// plus a scaled Brownian bridge, weight each proposal by the product of
// Euler-Maruyama sub-step densities over its proposal density, and average the
// weights over M bridges. Everything is accumulated in log space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "bbis/bridges.hpp"
#include "bbis/geometry.hpp"
#include "bbis/model.hpp"
#include "bbis/simulator.hpp"

namespace bbis {

enum class Method { BBIS, EM };

inline std::string to_string(Method m) { return m == Method::BBIS ? "bbis" : "em"; }

inline Method parse_method(const std::string& s) {
  if (s == "bbis") return Method::BBIS;
  if (s == "em") return Method::EM;
  throw Error("unknown method '" + s + "' (expected bbis or em)");
}

struct LikelihoodConfig {
  /// Interior nodes per interval. Ignored when h_target is set. N = 0 is plain
  /// Euler-Maruyama.
  std::size_t N = 0;
  std::size_t M = 50;
  std::uint64_t seed = 1;
  bool include_initial_density = false;
  /// Target sub-step; per-interval N_i = max(1, round(dt_i / h_target) - 1).
  std::optional<double> h_target;
  /// Proposal scale sigma; defaults to gamma.
  std::optional<double> proposal_sigma;
  unsigned threads = 1;

  void validate() const {
    if (M < 1) throw Error("LikelihoodConfig: M must be >= 1");
    if (h_target && !(*h_target > 0.0)) throw Error("LikelihoodConfig: h_target must be positive");
    if (proposal_sigma && !(*proposal_sigma > 0.0))
      throw Error("LikelihoodConfig: proposal_sigma must be positive");
  }

  std::size_t nodes_for(double dt) const {
    if (!h_target) return N;
    const double r = std::nearbyint(dt / *h_target) - 1.0;
    return r < 1.0 ? 1 : static_cast<std::size_t>(r);
  }
};

class LikelihoodError : public Error {
 public:
  LikelihoodError(std::size_t interval, const std::string& what)
      : Error(what + " (interval " + std::to_string(interval) + ")"), interval_(interval) {}
  std::size_t interval() const { return interval_; }

 private:
  std::size_t interval_;
};

inline double em_transition_logdensity(const RSFModel& model, Point2 y, Point2 x, double dt) {
  if (!(dt > 0.0)) throw Error("em_transition_logdensity: dt must be positive");
  const double var = model.gamma_sq() * dt;
  const Point2 mean = y + (0.5 * var) * model.grad_log_rsf(y);
  return isotropic_gauss2_logpdf(x - mean, var);
}

inline double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double a : v) mx = std::max(mx, a);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double a : v) s += std::exp(a - mx);
  return mx + std::log(s);
}

namespace detail {

// Log importance weights for every bridge of `e` on the interval a -> b of
// length dt. The ensemble's time scale may differ from dt; offsets are then
// rescaled by Brownian scaling. Returns log-mean-exp of the weights.
inline double bbis_interval(const RSFModel& model, Point2 a, Point2 b, double dt,
                            const BridgeEnsemble& e, std::optional<double> proposal_sigma,
                            std::vector<double>& lw, std::vector<Point2>& line) {
  const std::size_t n = e.nodes();
  const std::size_t m = e.bridges();
  const double np1 = static_cast<double>(n + 1);
  const double h = dt / np1;
  const double time_scale = dt / e.span();
  const double var = model.gamma_sq() * h;
  const double half_var = 0.5 * var;
  const double inv_two_var = 0.5 / var;
  const double sigma = proposal_sigma ? *proposal_sigma : model.gamma();
  const double offset_scale = sigma * std::sqrt(time_scale);
  // (N+1) Gaussian normalizers minus the proposal's scale Jacobian.
  const double constant = np1 * (-kLog2Pi - std::log(var)) +
                          2.0 * static_cast<double>(n) * std::log(sigma) +
                          static_cast<double>(n) * std::log(time_scale);

  line.resize(n);
  const Point2 step = b - a;
  for (std::size_t j = 1; j <= n; ++j) line[j - 1] = a + (static_cast<double>(j) / np1) * step;

  const Vec2 g_start = model.grad_log_rsf(a);
  lw.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto bridge = e.bridge(k);
    Point2 prev = a;
    Vec2 g = g_start;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Point2 node{line[j].x + offset_scale * bridge[j].x,
                        line[j].y + offset_scale * bridge[j].y};
      const double dx = node.x - prev.x - half_var * g.x;
      const double dy = node.y - prev.y - half_var * g.y;
      acc += dx * dx + dy * dy;
      g = model.grad_log_rsf(node);
      prev = node;
    }
    const double dx = b.x - prev.x - half_var * g.x;
    const double dy = b.y - prev.y - half_var * g.y;
    acc += dx * dx + dy * dy;
    lw[k] = constant - acc * inv_two_var - e.standard_log_density(k);
  }
  return log_sum_exp(lw) - std::log(static_cast<double>(m));
}

// Neumaier-compensated sum; deterministic for a fixed input order.
inline double compensated_sum(std::span<const double> v) {
  double s = 0.0;
  double c = 0.0;
  for (double x : v) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  return s + c;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// BBIS estimate of log p(x_next | x_prev) over dt. The ensemble geometry must
/// match dt: dt = h (N + 1) to 1e-12 relative.
inline double bbis_interval_logdensity(const RSFModel& model, Point2 x_prev, Point2 x_next,
                                       double dt, const BridgeEnsemble& ensemble,
                                       std::optional<double> proposal_sigma = std::nullopt) {
  if (!(dt > 0.0)) throw Error("bbis_interval_logdensity: dt must be positive");
  if (std::abs(dt - ensemble.span()) > 1e-12 * dt)
    throw Error("bbis_interval_logdensity: dt does not match ensemble h * (N + 1)");
  std::vector<double> lw;
  std::vector<Point2> line;
  const double v = detail::bbis_interval(model, x_prev, x_next, dt, ensemble, proposal_sigma, lw,
                                         line);
  if (!std::isfinite(v)) throw LikelihoodError(0, "bbis_interval_logdensity: non-finite result");
  return v;
}

/// Interval log-density under a likelihood configuration: N = 0 (or a config
/// that yields zero nodes) falls back to Euler-Maruyama over the full gap.
inline double bbis_interval_logdensity(const RSFModel& model, Point2 x_prev, Point2 x_next,
                                       double dt, const LikelihoodConfig& config) {
  config.validate();
  const std::size_t n = config.nodes_for(dt);
  if (n == 0) return em_transition_logdensity(model, x_prev, x_next, dt);
  const BridgeEnsemble e(config.M, n, dt / static_cast<double>(n + 1), config.seed);
  return bbis_interval_logdensity(model, x_prev, x_next, dt, e, config.proposal_sigma);
}

/// Log-likelihood of a track with bridges pre-simulated once. The same
/// ensemble serves every interval with the same node count, so repeated
/// evaluations at different parameters share common random numbers.
class TrackLikelihood {
 public:
  TrackLikelihood(Track track, LikelihoodConfig config, Method method = Method::BBIS)
      : track_(std::move(track)), config_(config), method_(method) {
    track_.validate();
    config_.validate();
    const std::size_t n_int = track_.intervals();
    ensemble_of_.assign(n_int, kNoEnsemble);
    if (method_ == Method::EM) return;
    std::map<std::size_t, std::size_t> by_nodes;
    for (std::size_t i = 0; i < n_int; ++i) {
      const double dt = track_.times[i + 1] - track_.times[i];
      const std::size_t n = config_.nodes_for(dt);
      if (n == 0) continue;
      auto it = by_nodes.find(n);
      if (it == by_nodes.end()) {
        // First geometry uses the configured seed; further ones get derived seeds.
        const std::uint64_t seed =
            ensembles_.empty() ? config_.seed
                               : detail::splitmix64(config_.seed ^ (n * 0x100000001b3ULL));
        ensembles_.emplace_back(config_.M, n, dt / static_cast<double>(n + 1), seed);
        it = by_nodes.emplace(n, ensembles_.size() - 1).first;
      }
      ensemble_of_[i] = it->second;
    }
  }

  const Track& track() const { return track_; }
  const LikelihoodConfig& config() const { return config_; }
  Method method() const { return method_; }
  const std::vector<BridgeEnsemble>& ensembles() const { return ensembles_; }

  /// Per-interval log-density terms, in interval order.
  std::vector<double> interval_terms(const RSFModel& model) const {
    const std::size_t n_int = track_.intervals();
    std::vector<double> terms(n_int);
    const unsigned workers = std::max(1u, std::min<unsigned>(config_.threads,
                                                             static_cast<unsigned>(n_int)));
    auto run = [&](std::size_t begin, std::size_t end) {
      std::vector<double> lw;
      std::vector<Point2> line;
      for (std::size_t i = begin; i < end; ++i) {
        const Point2 a = track_.points[i];
        const Point2 b = track_.points[i + 1];
        const double dt = track_.times[i + 1] - track_.times[i];
        terms[i] = ensemble_of_[i] == kNoEnsemble
                       ? em_transition_logdensity(model, a, b, dt)
                       : detail::bbis_interval(model, a, b, dt, ensembles_[ensemble_of_[i]],
                                               config_.proposal_sigma, lw, line);
      }
    };
    if (workers == 1) {
      run(0, n_int);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (n_int + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n_int, begin + chunk);
        if (begin < end) pool.emplace_back(run, begin, end);
      }
      for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < n_int; ++i)
      if (!std::isfinite(terms[i])) throw LikelihoodError(i, "non-finite interval log-density");
    return terms;
  }

  double operator()(const RSFModel& model) const {
    const auto terms = interval_terms(model);
    double ll = detail::compensated_sum(terms);
    if (config_.include_initial_density) ll += model.log_rsf_unnormalized(track_.points.front());
    return ll;
  }

 private:
  static constexpr std::size_t kNoEnsemble = static_cast<std::size_t>(-1);

  Track track_;
  LikelihoodConfig config_;
  Method method_;
  std::vector<BridgeEnsemble> ensembles_;
  std::vector<std::size_t> ensemble_of_;
};

inline double bbis_track_loglik(const RSFModel& model, const Track& track,
                                const LikelihoodConfig& config) {
  return TrackLikelihood(track, config, Method::BBIS)(model);
}

inline double em_track_loglik(const RSFModel& model, const Track& track) {
  LikelihoodConfig config;
  config.N = 0;
  return TrackLikelihood(track, config, Method::EM)(model);
}

}  // namespace bbis
