#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace bbis {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A location in the plane (map units). Also used for 2-vectors such as gradients.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;

  constexpr Point2& operator+=(Point2 b) {
    x += b.x;
    y += b.y;
    return *this;
  }
};

using Vec2 = Point2;

constexpr double squared_norm(Point2 p) { return p.x * p.x + p.y * p.y; }

inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Log-density of an isotropic bivariate Gaussian with per-coordinate variance `var`,
/// evaluated at a point whose offset from the mean is `d`.
inline double isotropic_gauss2_logpdf(Point2 d, double var) {
  return -kLog2Pi - std::log(var) - 0.5 * squared_norm(d) / var;
}

}  // namespace bbis
