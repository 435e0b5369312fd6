#pragma once

// BBIS and single-step Euler-Maruyama against the exact transition densities
// of the Brownian (beta = 0) and Ornstein-Uhlenbeck (quadratic-only) models.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "bbis/bridges.hpp"
#include "bbis/field.hpp"
#include "bbis/likelihood.hpp"
#include "bbis/model.hpp"
#include "bbis/oracle.hpp"
#include "bbis/studies.hpp"

namespace bbis {

struct OracleCheckConfig {
  std::size_t M = 200;
  std::size_t N = 100;
  double dt = 1.0;
  std::size_t intervals = 100;
  std::uint64_t seed = 1;
  double gamma_sq = 5.0;
  double beta = -0.1;  // quadratic coefficient of the OU model
  Point2 center{};
};

struct OracleCheckRow {
  std::string model;  // "bm" or "ou"
  std::size_t interval = 0;
  Point2 from;
  Point2 to;
  double exact = 0.0;
  double bbis = 0.0;
  double em = 0.0;
};

struct OracleInterval {
  Point2 from;
  Point2 to;
};

/// Intervals drawn from the exact law: start from the stationary distribution
/// (OU) or uniformly on [-10, 10]^2 (BM), end from the exact transition.
inline std::vector<OracleInterval> draw_oracle_intervals(bool ou, const OracleCheckConfig& c) {
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  std::vector<OracleInterval> out(c.intervals);
  const OUParams p = OUParams::from_quadratic(c.beta, c.center, c.gamma_sq);
  for (auto& iv : out) {
    if (ou) {
      const double sd0 = std::sqrt(p.stationary_variance());
      iv.from = c.center + Point2{sd0 * normal(rng), sd0 * normal(rng)};
      const double sd = std::sqrt(ou_transition_variance(p, c.dt));
      const Point2 mean = ou_transition_mean(p, iv.from, c.dt);
      iv.to = mean + Point2{sd * normal(rng), sd * normal(rng)};
    } else {
      iv.from = {unif(rng), unif(rng)};
      const double sd = std::sqrt(c.gamma_sq * c.dt);
      iv.to = iv.from + Point2{sd * normal(rng), sd * normal(rng)};
    }
  }
  return out;
}

inline std::vector<OracleCheckRow> oracle_check(const OracleCheckConfig& c) {
  if (c.N < 1) throw Error("oracle_check: N must be >= 1");
  const FieldList fields = make_field_list({quadratic_distance_field(c.center)});
  const RSFModel bm(fields, {0.0}, c.gamma_sq);
  const RSFModel ou(fields, {c.beta}, c.gamma_sq);
  const OUParams p = OUParams::from_quadratic(c.beta, c.center, c.gamma_sq);
  const BridgeEnsemble e(c.M, c.N, c.dt / static_cast<double>(c.N + 1), c.seed);

  std::vector<OracleCheckRow> rows;
  for (int which = 0; which < 2; ++which) {
    const bool is_ou = which == 1;
    const RSFModel& model = is_ou ? ou : bm;
    const auto ivs = draw_oracle_intervals(is_ou, c);
    for (std::size_t i = 0; i < ivs.size(); ++i) {
      OracleCheckRow r;
      r.model = is_ou ? "ou" : "bm";
      r.interval = i;
      r.from = ivs[i].from;
      r.to = ivs[i].to;
      r.exact = is_ou ? ou_transition_logdensity(p, r.from, r.to, c.dt)
                      : bm_transition_logdensity(c.gamma_sq, r.from, r.to, c.dt);
      r.bbis = bbis_interval_logdensity(model, r.from, r.to, c.dt, e);
      r.em = em_transition_logdensity(model, r.from, r.to, c.dt);
      rows.push_back(r);
    }
  }
  return rows;
}

inline void write_oracle_csv(std::ostream& os, const std::vector<OracleCheckRow>& rows) {
  os << "model,interval,x_from,y_from,x_to,y_to,exact,bbis,em,bbis_abs_err,em_abs_err\n";
  for (const auto& r : rows)
    os << r.model << ',' << r.interval << ',' << format_number(r.from.x) << ','
       << format_number(r.from.y) << ',' << format_number(r.to.x) << ',' << format_number(r.to.y)
       << ',' << format_number(r.exact) << ',' << format_number(r.bbis) << ','
       << format_number(r.em) << ',' << format_number(std::abs(r.bbis - r.exact)) << ','
       << format_number(std::abs(r.em - r.exact)) << '\n';
}

}  // namespace bbis
