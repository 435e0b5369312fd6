#pragma once

// Covariate fields c(x) over the plane: interpolated rasters (including Perlin
// noise landscapes) and the analytic squared distance to a center point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bbis/geometry.hpp"

namespace bbis {

/// Regular node lattice over a rectangle. Nodes sit at x_min + i*dx, i = 0..nx-1.
struct GridSpec {
  double x_min = -100.0;
  double x_max = 100.0;
  double y_min = -100.0;
  double y_max = 100.0;
  std::size_t nx = 201;
  std::size_t ny = 201;

  double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double dy() const { return (y_max - y_min) / static_cast<double>(ny - 1); }
  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
  Point2 node(std::size_t ix, std::size_t iy) const {
    return {x_min + static_cast<double>(ix) * dx(), y_min + static_cast<double>(iy) * dy()};
  }

  void validate() const {
    if (!(x_min < x_max) || !(y_min < y_max)) throw Error("GridSpec: empty extent");
    if (nx < 2 || ny < 2) throw Error("GridSpec: need at least 2 nodes per axis");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) ||
        !std::isfinite(y_max))
      throw Error("GridSpec: non-finite extent");
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Location of a point inside the grid for bilinear interpolation. Points
/// outside the grid are clamped to the nearest boundary point.
struct CellLocation {
  std::size_t i00 = 0;  // index of the lower-left node
  double tx = 0.0;
  double ty = 0.0;
};

namespace detail {

// Fractional index along one axis, clamped to [0, n-1] and snapped onto a node
// when within rounding distance of it so that node queries are exact.
inline void locate_axis(double p, double lo, double inv_step, std::size_t n, std::size_t& i,
                        double& t) {
  const double last = static_cast<double>(n - 1);
  double f = (p - lo) * inv_step;
  f = std::clamp(f, 0.0, last);
  const double r = std::nearbyint(f);
  if (std::abs(f - r) < 1e-9) f = r;
  std::size_t k = static_cast<std::size_t>(f);
  if (k > n - 2) k = n - 2;
  i = k;
  t = f - static_cast<double>(k);
}

}  // namespace detail

inline CellLocation locate(const GridSpec& g, Point2 p) {
  std::size_t ix = 0;
  std::size_t iy = 0;
  CellLocation loc;
  detail::locate_axis(p.x, g.x_min, 1.0 / g.dx(), g.nx, ix, loc.tx);
  detail::locate_axis(p.y, g.y_min, 1.0 / g.dy(), g.ny, iy, loc.ty);
  loc.i00 = g.index(ix, iy);
  return loc;
}

/// Bilinear interpolation of a node array (stride = element stride in doubles).
inline double bilinear(const GridSpec& g, const CellLocation& c, const double* data,
                       std::size_t stride = 1, std::size_t component = 0) {
  const double* p = data + component;
  const double v00 = p[c.i00 * stride];
  const double v10 = p[(c.i00 + 1) * stride];
  const double v01 = p[(c.i00 + g.nx) * stride];
  const double v11 = p[(c.i00 + g.nx + 1) * stride];
  const double ux = 1.0 - c.tx;
  const double uy = 1.0 - c.ty;
  return uy * (ux * v00 + c.tx * v10) + c.ty * (ux * v01 + c.tx * v11);
}

/// Raster covariate with per-node gradients precomputed by finite differences.
struct RasterData {
  GridSpec grid;
  std::vector<double> values;  // row-major, y outer, x inner
  std::vector<double> grad_x;
  std::vector<double> grad_y;
};

/// Analytic covariate c(x) = |x - center|^2.
struct QuadraticDistance {
  Point2 center;
};

/// Central differences at interior nodes, one-sided at the edges.
inline void compute_raster_gradients(RasterData& r) {
  const GridSpec& g = r.grid;
  r.grad_x.assign(g.size(), 0.0);
  r.grad_y.assign(g.size(), 0.0);
  const double dx = g.dx();
  const double dy = g.dy();
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const std::size_t xl = ix == 0 ? 0 : ix - 1;
      const std::size_t xr = ix + 1 == g.nx ? ix : ix + 1;
      const std::size_t yl = iy == 0 ? 0 : iy - 1;
      const std::size_t yr = iy + 1 == g.ny ? iy : iy + 1;
      r.grad_x[g.index(ix, iy)] = (r.values[g.index(xr, iy)] - r.values[g.index(xl, iy)]) /
                                  (static_cast<double>(xr - xl) * dx);
      r.grad_y[g.index(ix, iy)] = (r.values[g.index(ix, yr)] - r.values[g.index(ix, yl)]) /
                                  (static_cast<double>(yr - yl) * dy);
    }
  }
}

class CovariateField {
 public:
  using Kind = std::variant<RasterData, QuadraticDistance>;

  CovariateField(Kind kind, std::string id) : kind_(std::move(kind)), id_(std::move(id)) {}

  /// Builds a raster field from node values; gradients are derived here.
  static CovariateField raster(const GridSpec& grid, std::vector<double> values,
                               std::string id = "raster") {
    grid.validate();
    if (values.size() != grid.size()) throw Error("raster: value count does not match grid");
    for (double v : values)
      if (!std::isfinite(v)) throw Error("raster: non-finite value");
    RasterData r{grid, std::move(values), {}, {}};
    compute_raster_gradients(r);
    return CovariateField(std::move(r), std::move(id));
  }

  const std::string& id() const { return id_; }
  const Kind& kind() const { return kind_; }
  bool is_raster() const { return std::holds_alternative<RasterData>(kind_); }
  const RasterData& raster_data() const { return std::get<RasterData>(kind_); }
  const QuadraticDistance& quadratic() const { return std::get<QuadraticDistance>(kind_); }

  double value(Point2 p) const {
    if (const auto* q = std::get_if<QuadraticDistance>(&kind_)) return squared_norm(p - q->center);
    const auto& r = std::get<RasterData>(kind_);
    return bilinear(r.grid, locate(r.grid, p), r.values.data());
  }

  Vec2 gradient(Point2 p) const {
    if (const auto* q = std::get_if<QuadraticDistance>(&kind_)) return 2.0 * (p - q->center);
    const auto& r = std::get<RasterData>(kind_);
    const CellLocation c = locate(r.grid, p);
    return {bilinear(r.grid, c, r.grad_x.data()), bilinear(r.grid, c, r.grad_y.data())};
  }

 private:
  Kind kind_;
  std::string id_;
};

inline double field_value(const CovariateField& f, Point2 p) { return f.value(p); }
inline Vec2 field_gradient(const CovariateField& f, Point2 p) { return f.gradient(p); }

inline CovariateField quadratic_distance_field(Point2 center, std::string id = "sqdist") {
  return CovariateField(QuadraticDistance{center}, std::move(id));
}

// Classic two-dimensional gradient noise.
class PerlinNoise2D {
 public:
  explicit PerlinNoise2D(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::array<int, 256> p{};
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = p.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(p[i], p[j]);
    }
    for (std::size_t i = 0; i < 512; ++i) perm_[i] = p[i & 255];
    // Sub-lattice shift so the map origin is not pinned to a lattice zero.
    offset_x_ = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    offset_y_ = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  /// Noise value in [-1, 1].
  double operator()(double x, double y) const {
    x += offset_x_;
    y += offset_y_;
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int xi = static_cast<int>(static_cast<long long>(fx) & 255);
    const int yi = static_cast<int>(static_cast<long long>(fy) & 255);
    const double xf = x - fx;
    const double yf = y - fy;
    const double u = fade(xf);
    const double v = fade(yf);
    const int aa = perm_[perm_[xi] + yi];
    const int ab = perm_[perm_[xi] + yi + 1];
    const int ba = perm_[perm_[xi + 1] + yi];
    const int bb = perm_[perm_[xi + 1] + yi + 1];
    const double x1 = lerp(grad(aa, xf, yf), grad(ba, xf - 1.0, yf), u);
    const double x2 = lerp(grad(ab, xf, yf - 1.0), grad(bb, xf - 1.0, yf - 1.0), u);
    // Unit gradients bound |noise| by 1/sqrt(2); rescale to [-1, 1].
    return std::clamp(std::sqrt(2.0) * lerp(x1, x2, v), -1.0, 1.0);
  }

 private:
  static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
  static double lerp(double a, double b, double t) { return a + t * (b - a); }
  static double grad(int hash, double x, double y) {
    constexpr double s = 0.70710678118654752440;
    switch (hash & 7) {
      case 0: return x;
      case 1: return -x;
      case 2: return y;
      case 3: return -y;
      case 4: return s * (x + y);
      case 5: return s * (-x + y);
      case 6: return s * (x - y);
      default: return -s * (x + y);
    }
  }

  std::array<int, 512> perm_{};
  double offset_x_ = 0.0;
  double offset_y_ = 0.0;
};

/// Single-octave Perlin raster sampled at frequency * (node coordinates).
inline CovariateField generate_perlin_field(std::uint64_t seed, double frequency,
                                            const GridSpec& grid) {
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw Error("generate_perlin_field: frequency must be positive");
  grid.validate();
  const PerlinNoise2D noise(seed);
  std::vector<double> values(grid.size());
  for (std::size_t iy = 0; iy < grid.ny; ++iy)
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const Point2 p = grid.node(ix, iy);
      values[grid.index(ix, iy)] = noise(frequency * p.x, frequency * p.y);
    }
  return CovariateField::raster(grid, std::move(values), "perlin" + std::to_string(seed));
}

// Raster text format: "x_min x_max y_min y_max nx ny" header, then nx*ny values
// in row-major order (y outer, x inner).

inline void write_raster(std::ostream& os, const CovariateField& f) {
  const RasterData& r = f.raster_data();
  const GridSpec& g = r.grid;
  os << std::setprecision(17);
  os << g.x_min << ' ' << g.x_max << ' ' << g.y_min << ' ' << g.y_max << ' ' << g.nx << ' '
     << g.ny << '\n';
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      if (ix) os << ' ';
      os << r.values[g.index(ix, iy)];
    }
    os << '\n';
  }
}

inline CovariateField read_raster(std::istream& is, std::string id = "raster") {
  GridSpec g;
  if (!(is >> g.x_min >> g.x_max >> g.y_min >> g.y_max >> g.nx >> g.ny))
    throw Error("read_raster: malformed header");
  g.validate();
  std::vector<double> values(g.size());
  for (double& v : values)
    if (!(is >> v)) throw Error("read_raster: expected " + std::to_string(g.size()) + " values");
  return CovariateField::raster(g, std::move(values), std::move(id));
}

inline void save_raster(const std::string& path, const CovariateField& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_raster(os, f);
  if (!os) throw Error("failed writing " + path);
}

inline CovariateField load_raster(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_raster(is, path);
}

}  // namespace bbis
