#pragma once

// Derivative-free simplex minimization (Nelder-Mead).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "bbis/geometry.hpp"

namespace bbis {

struct NelderMeadOptions {
  /// Stop when max f - min f over the simplex falls below this.
  double f_spread_tol = 1e-6;
  std::size_t max_iterations = 2000;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Minimizes f starting from the simplex {x0, x0 + step_i e_i}. Non-finite
/// objective values are treated as +inf.
template <class F>
NelderMeadResult nelder_mead(F&& f, const std::vector<double>& x0, const std::vector<double>& step,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  if (n == 0 || step.size() != n) throw Error("nelder_mead: dimension mismatch");
  using Vec = std::vector<double>;
  NelderMeadResult res;
  auto eval = [&](const Vec& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Vec> pts(n + 1, x0);
  Vec fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  Vec centroid(n), xr(n), xe(n), xc(n);
  auto along = [&](Vec& out, const Vec& from, double t) {
    for (std::size_t d = 0; d < n; ++d) out[d] = centroid[d] + t * (from[d] - centroid[d]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];
    if (std::isfinite(fv[worst]) && fv[worst] - fv[best] < opt.f_spread_tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iterations) break;
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    along(xr, pts[worst], -opt.reflection);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      along(xe, pts[worst], -opt.reflection * opt.expansion);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second_worst]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    bool accepted = false;
    if (fr < fv[worst]) {
      along(xc, pts[worst], -opt.reflection * opt.contraction);
      const double fc = eval(xc);
      if (fc <= fr) {
        pts[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    } else {
      along(xc, pts[worst], opt.contraction);
      const double fc = eval(xc);
      if (fc < fv[worst]) {
        pts[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    }
    if (accepted) continue;
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d)
        pts[i][d] = pts[best][d] + opt.shrink * (pts[i][d] - pts[best][d]);
      fv[i] = eval(pts[i]);
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  const auto ib = static_cast<std::size_t>(it - fv.begin());
  res.x = pts[ib];
  res.f = fv[ib];
  return res;
}

}  // namespace bbis
