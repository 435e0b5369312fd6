#pragma once

// Fine-step Euler-Maruyama simulation of the Langevin diffusion
//   dX = (gamma^2 / 2) grad log pi(X) dt + gamma dW
// plus thinning/truncation into observation datasets.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bbis/geometry.hpp"
#include "bbis/model.hpp"

namespace bbis {

struct Track {
  std::vector<double> times;
  std::vector<Point2> points;

  std::size_t size() const { return times.size(); }
  std::size_t intervals() const { return times.empty() ? 0 : times.size() - 1; }

  void validate() const {
    if (times.size() != points.size()) throw Error("Track: times/points length mismatch");
    if (times.size() < 2) throw Error("Track: need at least 2 observations");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i]) || !is_finite(points[i]))
        throw Error("Track: non-finite entry at index " + std::to_string(i));
      if (i > 0 && !(times[i] > times[i - 1]))
        throw Error("Track: times not strictly increasing at index " + std::to_string(i));
    }
  }
};

class SimulationError : public Error {
 public:
  SimulationError(std::size_t step, const std::string& what)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Euler-Maruyama path with n_steps increments of size h_sim; times k * h_sim.
inline Track simulate_track(const RSFModel& model, Point2 x0, double h_sim, std::size_t n_steps,
                            std::uint64_t seed) {
  if (!(h_sim > 0.0)) throw Error("simulate_track: h_sim must be positive");
  if (!is_finite(x0)) throw Error("simulate_track: x0 must be finite");
  if (n_steps == 0) throw Error("simulate_track: n_steps must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double drift_scale = 0.5 * model.gamma_sq() * h_sim;
  const double noise_scale = std::sqrt(model.gamma_sq() * h_sim);

  Track t;
  t.times.resize(n_steps + 1);
  t.points.resize(n_steps + 1);
  Point2 x = x0;
  t.times[0] = 0.0;
  t.points[0] = x;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const Vec2 g = model.grad_log_rsf(x);
    const double zx = normal(rng);
    const double zy = normal(rng);
    x = {x.x + drift_scale * g.x + noise_scale * zx, x.y + drift_scale * g.y + noise_scale * zy};
    if (!is_finite(x)) throw SimulationError(k + 1, "simulate_track: non-finite iterate");
    t.times[k + 1] = static_cast<double>(k + 1) * h_sim;
    t.points[k + 1] = x;
  }
  return t;
}

/// Keeps indices 0, factor, 2 factor, ...; the tail remainder is dropped.
inline Track thin_track(const Track& track, std::size_t factor) {
  if (factor == 0) throw Error("thin_track: factor must be >= 1");
  Track out;
  for (std::size_t i = 0; i < track.size(); i += factor) {
    out.times.push_back(track.times[i]);
    out.points.push_back(track.points[i]);
  }
  if (out.size() < 2) throw Error("thin_track: fewer than 2 observations remain");
  return out;
}

/// Keeps the observations with time <= t_max.
inline Track truncate_track(const Track& track, double t_max) {
  Track out;
  for (std::size_t i = 0; i < track.size() && track.times[i] <= t_max; ++i) {
    out.times.push_back(track.times[i]);
    out.points.push_back(track.points[i]);
  }
  if (out.size() < 2) throw Error("truncate_track: fewer than 2 observations remain");
  return out;
}

/// First `count` observations.
inline Track head_track(const Track& track, std::size_t count) {
  if (count < 2 || count > track.size()) throw Error("head_track: invalid observation count");
  Track out;
  out.times.assign(track.times.begin(), track.times.begin() + static_cast<std::ptrdiff_t>(count));
  out.points.assign(track.points.begin(), track.points.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

/// Drops the first `k` observations and re-bases time at the new first one.
inline Track drop_leading(const Track& track, std::size_t k) {
  if (k + 2 > track.size()) throw Error("drop_leading: too few observations");
  Track out;
  const double t0 = track.times[k];
  for (std::size_t i = k; i < track.size(); ++i) {
    out.times.push_back(track.times[i] - t0);
    out.points.push_back(track.points[i]);
  }
  return out;
}

// CSV: header "t,x,y", 17 significant digits.

inline void write_track_csv(std::ostream& os, const Track& track) {
  os << "t,x,y\n" << std::setprecision(17);
  for (std::size_t i = 0; i < track.size(); ++i)
    os << track.times[i] << ',' << track.points[i].x << ',' << track.points[i].y << '\n';
}

inline Track read_track_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("track csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y") throw Error("track csv: expected header 't,x,y'");
  Track t;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    double tt = 0, x = 0, y = 0;
    char c1 = 0, c2 = 0;
    if (!(ls >> tt >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',')
      throw Error("track csv: malformed row at line " + std::to_string(lineno));
    t.times.push_back(tt);
    t.points.push_back({x, y});
  }
  t.validate();
  return t;
}

inline void save_track_csv(const std::string& path, const Track& track) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_track_csv(os, track);
}

inline Track load_track_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_track_csv(is);
}

}  // namespace bbis
