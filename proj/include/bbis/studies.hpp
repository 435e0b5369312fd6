#pragma once

// Simulation studies: simulate fine tracks, thin them to observation datasets,
// fit each one, and tabulate the estimates.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bbis/config_file.hpp"
#include "bbis/estimator.hpp"
#include "bbis/field.hpp"
#include "bbis/likelihood.hpp"
#include "bbis/model.hpp"
#include "bbis/simulator.hpp"

namespace bbis {

enum class StudyKind { SimI, SimII, ConvI, ConvII, Custom };

inline StudyKind parse_study_kind(const std::string& s) {
  if (s == "SimI" || s == "sim1") return StudyKind::SimI;
  if (s == "SimII" || s == "sim2") return StudyKind::SimII;
  if (s == "ConvI" || s == "conv1") return StudyKind::ConvI;
  if (s == "ConvII" || s == "conv2") return StudyKind::ConvII;
  if (s == "Custom" || s == "custom") return StudyKind::Custom;
  throw ConfigError("unknown study_kind '" + s + "'");
}

inline std::string to_string(StudyKind k) {
  switch (k) {
    case StudyKind::SimI: return "SimI";
    case StudyKind::SimII: return "SimII";
    case StudyKind::ConvI: return "ConvI";
    case StudyKind::ConvII: return "ConvII";
    default: return "Custom";
  }
}

enum class SweepAxis { Dt, Nodes, Bridges };

/// Shortest decimal representation that round-trips.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct StudyConfig {
  StudyKind study_kind = StudyKind::SimI;
  std::size_t replicates = 20;
  std::vector<double> true_beta{4.0, 2.0, -0.1};
  double true_gamma_sq = 5.0;
  double h_sim = 0.01;
  std::vector<double> dt_values;
  std::vector<std::size_t> N_values;
  std::vector<std::size_t> M_values;
  std::optional<std::size_t> n_obs;
  std::optional<double> t_max;
  double h_target = 0.01;
  std::size_t M = 50;
  std::size_t N = 50;  // fixed node count when M is swept
  double dt = 1.0;     // fixed observation gap when N or M is swept
  std::uint64_t base_seed = 1;
  std::vector<std::uint64_t> field_seeds{1, 2};
  Method method = Method::BBIS;

  // Landscape and simulation settings.
  double perlin_frequency = 0.05;
  GridSpec grid{};
  Point2 center{};
  std::size_t burn_in = 10000;
  double x0_half_width = 50.0;
  unsigned workers = 0;  // 0: hardware concurrency
  std::size_t max_iterations = 2000;
  double f_spread_tol = 1e-6;
  bool record_timing = false;

  SweepAxis sweep_axis() const {
    if (!dt_values.empty()) return SweepAxis::Dt;
    if (!N_values.empty()) return SweepAxis::Nodes;
    return SweepAxis::Bridges;
  }

  std::size_t sweep_size() const {
    switch (sweep_axis()) {
      case SweepAxis::Dt: return dt_values.size();
      case SweepAxis::Nodes: return N_values.size();
      default: return M_values.size();
    }
  }

  double sweep_value(std::size_t s) const {
    switch (sweep_axis()) {
      case SweepAxis::Dt: return dt_values[s];
      case SweepAxis::Nodes: return static_cast<double>(N_values[s]);
      default: return static_cast<double>(M_values[s]);
    }
  }

  std::string sweep_name() const {
    switch (sweep_axis()) {
      case SweepAxis::Dt: return "dt";
      case SweepAxis::Nodes: return "N";
      default: return "M";
    }
  }

  double cell_dt(std::size_t s) const { return sweep_axis() == SweepAxis::Dt ? dt_values[s] : dt; }

  std::size_t covariate_count() const { return field_seeds.size() + 1; }

  std::size_t thinning_factor(double gap) const {
    const double f = std::nearbyint(gap / h_sim);
    if (f < 1.0 || std::abs(f * h_sim - gap) > 1e-9 * gap)
      throw ConfigError("observation gap " + format_number(gap) +
                        " is not a multiple of h_sim");
    return static_cast<std::size_t>(f);
  }

  void validate() const {
    const int nonempty = int(!dt_values.empty()) + int(!N_values.empty()) + int(!M_values.empty());
    if (nonempty != 1) throw ConfigError("exactly one of dt_values, N_values, M_values must be set");
    const SweepAxis axis = sweep_axis();
    auto need = [&](SweepAxis a, const char* what) {
      if (axis != a) throw ConfigError(to_string(study_kind) + " sweeps " + what);
    };
    switch (study_kind) {
      case StudyKind::SimI:
        need(SweepAxis::Dt, "dt_values");
        if (!n_obs) throw ConfigError("SimI requires n_obs");
        break;
      case StudyKind::SimII:
        need(SweepAxis::Dt, "dt_values");
        if (!t_max) throw ConfigError("SimII requires t_max");
        break;
      case StudyKind::ConvI: need(SweepAxis::Nodes, "N_values"); break;
      case StudyKind::ConvII: need(SweepAxis::Bridges, "M_values"); break;
      case StudyKind::Custom: break;
    }
    if (n_obs.has_value() == t_max.has_value())
      throw ConfigError("exactly one of n_obs and t_max must be set");
    if (n_obs && *n_obs < 2) throw ConfigError("n_obs must be >= 2");
    if (t_max && !(*t_max > 0.0)) throw ConfigError("t_max must be positive");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (true_beta.size() != covariate_count())
      throw ConfigError("true_beta needs one entry per covariate (field_seeds + 1 quadratic)");
    if (!(true_gamma_sq > 0.0)) throw ConfigError("true_gamma_sq must be positive");
    if (!(h_sim > 0.0)) throw ConfigError("h_sim must be positive");
    if (!(h_target > 0.0)) throw ConfigError("h_target must be positive");
    if (M < 1) throw ConfigError("M must be >= 1");
    for (auto m : M_values)
      if (m < 1) throw ConfigError("M_values entries must be >= 1");
    if (!(perlin_frequency > 0.0)) throw ConfigError("perlin_frequency must be positive");
    try {
      grid.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    for (std::size_t s = 0; s < sweep_size(); ++s) {
      const double gap = cell_dt(s);
      if (!(gap > 0.0)) throw ConfigError("observation gaps must be positive");
      (void)thinning_factor(gap);
    }
  }

  static StudyConfig from_config(const KeyValueConfig& kv) {
    StudyConfig c;
    c.study_kind = parse_study_kind(kv.get_string("study_kind", "SimI"));
    c.replicates = kv.get_uint("replicates", c.replicates);
    c.true_beta = kv.get_doubles("true_beta", c.true_beta);
    c.true_gamma_sq = kv.get_double("true_gamma_sq", c.true_gamma_sq);
    c.h_sim = kv.get_double("h_sim", c.h_sim);
    c.dt_values = kv.get_doubles("dt_values", {});
    for (auto v : kv.get_uints("N_values", {})) c.N_values.push_back(v);
    for (auto v : kv.get_uints("M_values", {})) c.M_values.push_back(v);
    if (kv.has("n_obs")) c.n_obs = kv.get_uint("n_obs", 0);
    if (kv.has("t_max")) c.t_max = kv.get_double("t_max", 0.0);
    c.h_target = kv.get_double("h_target", c.h_target);
    c.M = kv.get_uint("M", c.M);
    c.N = kv.get_uint("N", c.N);
    c.dt = kv.get_double("dt", c.dt);
    c.base_seed = kv.get_uint("base_seed", c.base_seed);
    c.field_seeds = kv.get_uints("field_seeds", c.field_seeds);
    c.method = parse_method(kv.get_string("method", "bbis"));
    c.perlin_frequency = kv.get_double("perlin_frequency", c.perlin_frequency);
    c.grid.x_min = kv.get_double("grid_x_min", c.grid.x_min);
    c.grid.x_max = kv.get_double("grid_x_max", c.grid.x_max);
    c.grid.y_min = kv.get_double("grid_y_min", c.grid.y_min);
    c.grid.y_max = kv.get_double("grid_y_max", c.grid.y_max);
    c.grid.nx = kv.get_uint("grid_nx", c.grid.nx);
    c.grid.ny = kv.get_uint("grid_ny", c.grid.ny);
    c.center.x = kv.get_double("center_x", c.center.x);
    c.center.y = kv.get_double("center_y", c.center.y);
    c.burn_in = kv.get_uint("burn_in", c.burn_in);
    c.x0_half_width = kv.get_double("x0_half_width", c.x0_half_width);
    c.workers = static_cast<unsigned>(kv.get_uint("workers", c.workers));
    c.max_iterations = kv.get_uint("max_iterations", c.max_iterations);
    c.f_spread_tol = kv.get_double("f_spread_tol", c.f_spread_tol);
    c.record_timing = kv.get_uint("record_timing", 0) != 0;
    return c;
  }

  /// Full-scale defaults for each study kind.
  static StudyConfig defaults(StudyKind kind) {
    StudyConfig c;
    c.study_kind = kind;
    switch (kind) {
      case StudyKind::SimI:
        c.dt_values = {0.05, 0.1, 0.2, 0.5, 1.0};
        c.n_obs = 5000;
        break;
      case StudyKind::SimII:
        c.dt_values = {0.05, 0.1, 0.2, 0.5, 1.0};
        c.t_max = 500.0;
        break;
      case StudyKind::ConvI:
        c.N_values = {4, 9, 49, 99};
        c.n_obs = 5000;
        break;
      case StudyKind::ConvII:
        c.M_values = {5, 10, 50, 100, 200};
        c.n_obs = 5000;
        break;
      case StudyKind::Custom: break;
    }
    c.replicates = 100;
    return c;
  }
};

/// Perlin rasters (one per field seed) followed by the squared distance to the center.
inline FieldList build_fields(const StudyConfig& c) {
  std::vector<CovariateField> fields;
  for (auto s : c.field_seeds) fields.push_back(generate_perlin_field(s, c.perlin_frequency, c.grid));
  fields.push_back(quadratic_distance_field(c.center));
  return make_field_list(std::move(fields));
}

/// Seed of the simulated track for replicate r. Shared across sweep values so
/// every cell of a replicate thins the same underlying path.
inline std::uint64_t track_seed(const StudyConfig& c, std::size_t replicate) {
  return c.base_seed + replicate;
}

/// Seed of the bridge ensemble for cell (s, r): base_seed + s * 10^6 + r.
inline std::uint64_t cell_seed(const StudyConfig& c, std::size_t sweep_index, std::size_t replicate) {
  return c.base_seed + sweep_index * 1000000ULL + replicate;
}

/// Observation dataset for cell (s, r): burn-in, fine Euler-Maruyama path,
/// thinning to the cell's gap, then n_obs / t_max truncation.
inline Track simulate_observations(const StudyConfig& c, const RSFModel& truth, std::size_t s,
                                   std::size_t replicate) {
  const std::uint64_t seed = track_seed(c, replicate);
  std::mt19937_64 init_rng(detail::splitmix64(seed));
  std::uniform_real_distribution<double> unif(-c.x0_half_width, c.x0_half_width);
  const double ux = unif(init_rng);
  const double uy = unif(init_rng);
  Point2 x0 = c.center + Point2{ux, uy};
  if (c.burn_in > 0) {
    const Track burn = simulate_track(truth, x0, c.h_sim, c.burn_in, detail::splitmix64(seed + 1));
    x0 = burn.points.back();
  }
  const std::size_t factor = c.thinning_factor(c.cell_dt(s));
  std::size_t fine_steps = 0;
  if (c.n_obs) {
    std::size_t max_factor = factor;
    for (std::size_t k = 0; k < c.sweep_size(); ++k)
      max_factor = std::max(max_factor, c.thinning_factor(c.cell_dt(k)));
    fine_steps = (*c.n_obs - 1) * max_factor;
  } else {
    fine_steps = static_cast<std::size_t>(std::ceil(*c.t_max / c.h_sim - 1e-9));
  }
  const Track fine = simulate_track(truth, x0, c.h_sim, fine_steps, seed);
  const Track thinned = thin_track(fine, factor);
  if (c.n_obs) return head_track(thinned, *c.n_obs);
  return truncate_track(thinned, *c.t_max * (1.0 + 1e-12));
}

inline LikelihoodConfig cell_likelihood_config(const StudyConfig& c, std::size_t s,
                                               std::size_t replicate) {
  LikelihoodConfig lc;
  lc.seed = cell_seed(c, s, replicate);
  lc.M = c.M;
  switch (c.sweep_axis()) {
    case SweepAxis::Dt: lc.h_target = c.h_target; break;
    case SweepAxis::Nodes: lc.N = c.N_values[s]; break;
    case SweepAxis::Bridges:
      lc.N = c.N;
      lc.M = c.M_values[s];
      break;
  }
  return lc;
}

struct StudyRow {
  std::size_t sweep_index = 0;
  double sweep_value = 0.0;
  std::size_t replicate = 0;
  Method method = Method::BBIS;
  double dt = 0.0;
  std::size_t N = 0;
  std::size_t M = 0;
  FitResult fit;
  std::string error;  // non-empty when the replicate failed outright
};

struct StudyResult {
  StudyConfig config;
  std::vector<StudyRow> rows;
};

inline std::string results_header(std::size_t j) {
  std::string h = "replicate,method,dt,N,M";
  for (std::size_t m = 1; m <= j; ++m) h += ",beta" + std::to_string(m);
  h += ",gamma_sq,loglik,converged,wall_time";
  return h;
}

/// One FitResult CSV row.
inline std::string format_row(std::size_t replicate, Method method, double dt, std::size_t n,
                              std::size_t m, const FitResult& f, std::size_t j) {
  std::string s = std::to_string(replicate) + "," + to_string(method) + "," + format_number(dt) +
                  "," + std::to_string(n) + "," + std::to_string(m);
  for (std::size_t k = 0; k < j; ++k)
    s += "," + format_number(k < f.beta_hat.size() ? f.beta_hat[k]
                                                   : std::numeric_limits<double>::quiet_NaN());
  s += "," + format_number(f.gamma_sq_hat) + "," + format_number(f.loglik) + "," +
       (f.converged ? "true" : "false") + "," + format_number(f.wall_time);
  return s;
}

inline std::string format_row(const StudyRow& r, std::size_t j) {
  return format_row(r.replicate, r.method, r.dt, r.N, r.M, r.fit, j);
}

inline void sort_rows(std::vector<StudyRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const StudyRow& a, const StudyRow& b) {
    return a.sweep_index != b.sweep_index ? a.sweep_index < b.sweep_index
                                          : a.replicate < b.replicate;
  });
}

inline void write_results_csv(std::ostream& os, const StudyResult& r) {
  const std::size_t j = r.config.covariate_count();
  os << results_header(j) << '\n';
  for (const auto& row : r.rows) os << format_row(row, j) << '\n';
}

/// Runs one cell of the study grid. Failures become rows with converged = false.
inline StudyRow run_cell(const StudyConfig& c, const FieldList& fields, const RSFModel& truth,
                         std::size_t s, std::size_t replicate) {
  StudyRow row;
  row.sweep_index = s;
  row.sweep_value = c.sweep_value(s);
  row.replicate = replicate;
  row.method = c.method;
  row.dt = c.cell_dt(s);
  const LikelihoodConfig lc = cell_likelihood_config(c, s, replicate);
  row.N = c.method == Method::EM ? 0 : lc.nodes_for(row.dt);
  row.M = c.method == Method::EM ? 0 : lc.M;
  row.fit.beta_hat.assign(c.covariate_count(), std::numeric_limits<double>::quiet_NaN());
  row.fit.gamma_sq_hat = std::numeric_limits<double>::quiet_NaN();
  row.fit.loglik = std::numeric_limits<double>::quiet_NaN();
  try {
    const Track obs = simulate_observations(c, truth, s, replicate);
    FitOptions opts;
    opts.nm.max_iterations = c.max_iterations;
    opts.nm.f_spread_tol = c.f_spread_tol;
    row.fit = fit(obs, fields, lc, c.method, opts);
  } catch (const Error& e) {
    row.error = e.what();
    row.fit.converged = false;
  }
  if (!c.record_timing) row.fit.wall_time = 0.0;
  return row;
}

/// Runs every (sweep value, replicate) cell on a worker pool. When
/// `stream_path` is given, each finished row is appended and flushed there in
/// completion order; the file is rewritten sorted when the run completes.
inline StudyResult run_study(const StudyConfig& config,
                             const std::optional<std::filesystem::path>& stream_path = std::nullopt,
                             const std::function<void(const StudyRow&)>& on_row = {}) {
  config.validate();
  const FieldList fields = build_fields(config);
  const RSFModel truth(fields, config.true_beta, config.true_gamma_sq);
  const std::size_t j = config.covariate_count();
  const std::size_t total = config.sweep_size() * config.replicates;

  std::ofstream stream;
  if (stream_path) {
    stream.open(*stream_path, std::ios::trunc);
    if (!stream) throw Error("cannot open " + stream_path->string() + " for writing");
    stream << results_header(j) << '\n' << std::flush;
  }

  StudyResult result;
  result.config = config;
  result.rows.reserve(total);
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next++; cell < total; cell = next++) {
      const std::size_t s = cell / config.replicates;
      const std::size_t r = cell % config.replicates;
      StudyRow row = run_cell(config, fields, truth, s, r);
      std::lock_guard<std::mutex> lock(mu);
      if (stream.is_open()) stream << format_row(row, j) << '\n' << std::flush;
      if (on_row) on_row(row);
      result.rows.push_back(std::move(row));
    }
  };
  unsigned workers = config.workers ? config.workers : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(total)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  sort_rows(result.rows);

  if (stream_path) {
    stream.close();
    const auto tmp = std::filesystem::path(stream_path->string() + ".tmp");
    {
      std::ofstream os(tmp, std::ios::trunc);
      if (!os) throw Error("cannot open " + tmp.string() + " for writing");
      write_results_csv(os, result);
    }
    std::filesystem::rename(tmp, *stream_path);
  }
  return result;
}

// Summaries ------------------------------------------------------------------

/// Linear-interpolation quantile of sorted data (R type 7).
inline double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return v[lo] + t * (v[hi] - v[lo]);
}

struct ParameterSummary {
  double sweep_value = 0.0;
  std::string parameter;
  std::size_t n = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;
};

struct StudySummary {
  std::vector<ParameterSummary> rows;
  std::size_t failed = 0;
};

inline std::vector<std::string> parameter_names(std::size_t j) {
  std::vector<std::string> names;
  for (std::size_t m = 1; m <= j; ++m) names.push_back("beta" + std::to_string(m));
  names.push_back("gamma_sq");
  return names;
}

inline ParameterSummary summarize_values(std::vector<double> v, double truth) {
  if (v.empty()) throw Error("summarize: no values");
  std::sort(v.begin(), v.end());
  ParameterSummary s;
  s.n = v.size();
  s.median = quantile_sorted(v, 0.5);
  s.q25 = quantile_sorted(v, 0.25);
  s.q75 = quantile_sorted(v, 0.75);
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  s.bias = s.mean - truth;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.variance = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  return s;
}

/// Values of one parameter for the converged rows of one sweep value.
inline std::vector<double> parameter_values(const StudyResult& r, std::size_t sweep_index,
                                            std::size_t param) {
  const std::size_t j = r.config.covariate_count();
  std::vector<double> v;
  for (const auto& row : r.rows) {
    if (row.sweep_index != sweep_index || !row.fit.converged) continue;
    v.push_back(param < j ? row.fit.beta_hat[param] : row.fit.gamma_sq_hat);
  }
  return v;
}

inline double parameter_truth(const StudyConfig& c, std::size_t param) {
  return param < c.true_beta.size() ? c.true_beta[param] : c.true_gamma_sq;
}

/// One row per (sweep value, parameter) over converged fits.
inline StudySummary summarize(const StudyResult& r) {
  if (r.rows.empty()) throw Error("summarize: empty result");
  StudySummary out;
  const auto names = parameter_names(r.config.covariate_count());
  for (const auto& row : r.rows)
    if (!row.fit.converged) ++out.failed;
  for (std::size_t s = 0; s < r.config.sweep_size(); ++s) {
    for (std::size_t p = 0; p < names.size(); ++p) {
      auto v = parameter_values(r, s, p);
      if (v.empty()) continue;
      ParameterSummary ps = summarize_values(std::move(v), parameter_truth(r.config, p));
      ps.sweep_value = r.config.sweep_value(s);
      ps.parameter = names[p];
      out.rows.push_back(ps);
    }
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const StudySummary& s) {
  os << "sweep_value,parameter,n,median,q25,q75,mean,bias,variance\n";
  for (const auto& r : s.rows)
    os << format_number(r.sweep_value) << ',' << r.parameter << ',' << r.n << ','
       << format_number(r.median) << ',' << format_number(r.q25) << ',' << format_number(r.q75)
       << ',' << format_number(r.mean) << ',' << format_number(r.bias) << ','
       << format_number(r.variance) << '\n';
  os << "# failed_fits," << s.failed << '\n';
}

}  // namespace bbis
