#pragma once

// Maximum likelihood estimation of (beta, gamma^2) with Nelder-Mead over
// (beta_1..beta_J, log gamma^2).

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "bbis/likelihood.hpp"
#include "bbis/model.hpp"
#include "bbis/nelder_mead.hpp"
#include "bbis/simulator.hpp"

namespace bbis {

struct FitResult {
  std::vector<double> beta_hat;
  double gamma_sq_hat = 0.0;
  double loglik = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
  double wall_time = 0.0;  // seconds
};

struct InitialParams {
  std::vector<double> beta;
  double gamma_sq = 0.0;
};

/// beta = 0; gamma^2 = mean over intervals of |dx|^2 / (2 dt).
inline InitialParams initial_params(const Track& track, std::size_t j) {
  if (track.size() < 2) throw Error("initial_params: need at least 2 observations");
  double s = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    const double dt = track.times[i] - track.times[i - 1];
    s += squared_norm(track.points[i] - track.points[i - 1]) / (2.0 * dt);
  }
  return {std::vector<double>(j, 0.0), s / static_cast<double>(track.intervals())};
}

enum class GammaParametrization {
  Log,      // optimize log gamma^2 (unconstrained)
  Barrier,  // optimize gamma^2 directly; non-positive values are rejected
};

struct FitOptions {
  NelderMeadOptions nm{};
  double beta_step = 0.5;
  double log_gamma_sq_step = 0.25;
  GammaParametrization gamma_param = GammaParametrization::Log;
};

/// Negative log-likelihood as a function of the optimizer's parameter vector.
/// Bridges are fixed at construction, so the objective is deterministic.
class LikelihoodObjective {
 public:
  LikelihoodObjective(const Track& track, FieldList fields, const LikelihoodConfig& config,
                      Method method, GammaParametrization gp = GammaParametrization::Log)
      : lik_(track, config, method), fields_(std::move(fields)), gp_(gp) {
    if (fields_.empty()) throw Error("fit: at least one covariate field is required");
  }

  std::size_t dimension() const { return fields_.size() + 1; }
  const TrackLikelihood& likelihood() const { return lik_; }

  std::vector<double> beta_of(const std::vector<double>& p) const {
    return {p.begin(), p.begin() + static_cast<std::ptrdiff_t>(fields_.size())};
  }
  double gamma_sq_of(const std::vector<double>& p) const {
    return gp_ == GammaParametrization::Log ? std::exp(p.back()) : p.back();
  }
  std::vector<double> to_params(const std::vector<double>& beta, double gamma_sq) const {
    std::vector<double> p = beta;
    p.push_back(gp_ == GammaParametrization::Log ? std::log(gamma_sq) : gamma_sq);
    return p;
  }

  double loglik(const std::vector<double>& beta, double gamma_sq) const {
    return lik_(RSFModel(fields_, beta, gamma_sq));
  }

  /// -loglik, or +inf where the parameters are invalid or the likelihood fails.
  double operator()(const std::vector<double>& p) const {
    const double g2 = gamma_sq_of(p);
    if (!(g2 > 0.0) || !std::isfinite(g2)) return std::numeric_limits<double>::infinity();
    for (double b : p)
      if (!std::isfinite(b)) return std::numeric_limits<double>::infinity();
    try {
      return -loglik(beta_of(p), g2);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }

 private:
  TrackLikelihood lik_;
  FieldList fields_;
  GammaParametrization gp_;
};

inline FitResult fit(const Track& track, const FieldList& fields, const LikelihoodConfig& config,
                     Method method, const FitOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  const LikelihoodObjective objective(track, fields, config, method, options.gamma_param);
  const InitialParams init = initial_params(track, fields.size());
  const std::vector<double> x0 = objective.to_params(init.beta, init.gamma_sq);

  const double f0 = objective(x0);
  if (!std::isfinite(f0)) throw Error("fit: objective is not finite at the initial point");

  std::vector<double> step(objective.dimension(), options.beta_step);
  step.back() = options.gamma_param == GammaParametrization::Log
                    ? options.log_gamma_sq_step
                    : init.gamma_sq * std::expm1(options.log_gamma_sq_step);

  const NelderMeadResult nm = nelder_mead(objective, x0, step, options.nm);
  FitResult r;
  r.beta_hat = objective.beta_of(nm.x);
  r.gamma_sq_hat = objective.gamma_sq_of(nm.x);
  r.loglik = -nm.f;
  r.iterations = nm.iterations;
  r.converged = nm.converged && std::isfinite(r.loglik);
  r.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace bbis
