#pragma once

// Resource selection function log pi(x) = sum_m beta_m c_m(x) (unnormalized)
// and the Langevin drift (gamma^2 / 2) grad log pi(x).

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "bbis/field.hpp"
#include "bbis/geometry.hpp"

namespace bbis {

using FieldPtr = std::shared_ptr<const CovariateField>;
using FieldList = std::vector<FieldPtr>;

inline FieldList make_field_list(std::vector<CovariateField> fields) {
  FieldList out;
  out.reserve(fields.size());
  for (auto& f : fields) out.push_back(std::make_shared<const CovariateField>(std::move(f)));
  return out;
}

class RSFModel {
 public:
  RSFModel(FieldList covariates, std::vector<double> beta, double gamma_sq)
      : covariates_(std::move(covariates)), beta_(std::move(beta)), gamma_sq_(gamma_sq) {
    if (beta_.size() != covariates_.size())
      throw Error("RSFModel: beta length must equal covariate count");
    if (!(gamma_sq_ > 0.0) || !std::isfinite(gamma_sq_))
      throw Error("RSFModel: gamma_sq must be positive");
    for (const auto& c : covariates_)
      if (!c) throw Error("RSFModel: null covariate");
    build_gradient_cache();
  }

  const FieldList& covariates() const { return covariates_; }
  const std::vector<double>& beta() const { return beta_; }
  double gamma_sq() const { return gamma_sq_; }
  double gamma() const { return std::sqrt(gamma_sq_); }

  /// A copy with new parameters on the same covariates.
  RSFModel with_params(std::vector<double> beta, double gamma_sq) const {
    return RSFModel(covariates_, std::move(beta), gamma_sq);
  }

  double log_rsf_unnormalized(Point2 p) const {
    double s = 0.0;
    for (std::size_t m = 0; m < covariates_.size(); ++m) s += beta_[m] * covariates_[m]->value(p);
    return s;
  }

  /// sum_m beta_m grad c_m(p). Rasters sharing a grid are pre-combined into one
  /// weighted gradient raster, so each query costs one bilinear lookup per grid.
  Vec2 grad_log_rsf(Point2 p) const {
    Vec2 g{quad_slope_ * p.x + quad_offset_.x, quad_slope_ * p.y + quad_offset_.y};
    for (const auto& layer : raster_layers_) {
      double fx = std::clamp((p.x - layer.grid.x_min) * layer.inv_dx, 0.0, layer.last_x);
      double fy = std::clamp((p.y - layer.grid.y_min) * layer.inv_dy, 0.0, layer.last_y);
      const double ix = std::min(std::floor(fx), layer.last_x - 1.0);
      const double iy = std::min(std::floor(fy), layer.last_y - 1.0);
      const double tx = fx - ix;
      const double ty = fy - iy;
      const std::size_t i00 =
          static_cast<std::size_t>(iy) * layer.grid.nx + static_cast<std::size_t>(ix);
      const double* v00 = layer.grad.data() + 2 * i00;
      const double* v01 = v00 + 2 * layer.grid.nx;
      const double ux = 1.0 - tx;
      const double uy = 1.0 - ty;
      g.x += uy * (ux * v00[0] + tx * v00[2]) + ty * (ux * v01[0] + tx * v01[2]);
      g.y += uy * (ux * v00[1] + tx * v00[3]) + ty * (ux * v01[1] + tx * v01[3]);
    }
    return g;
  }

 private:
  struct RasterLayer {
    GridSpec grid;
    std::vector<double> grad;  // interleaved (gx, gy) per node
    double inv_dx = 1.0;
    double inv_dy = 1.0;
    double last_x = 1.0;
    double last_y = 1.0;
  };

  void build_gradient_cache() {
    double slope = 0.0;
    Vec2 offset{};
    for (std::size_t m = 0; m < covariates_.size(); ++m) {
      const CovariateField& f = *covariates_[m];
      const double b = beta_[m];
      if (!f.is_raster()) {
        // beta * 2 (x - c)
        slope += 2.0 * b;
        offset += (-2.0 * b) * f.quadratic().center;
        continue;
      }
      const RasterData& r = f.raster_data();
      RasterLayer* layer = nullptr;
      for (auto& l : raster_layers_)
        if (l.grid == r.grid) layer = &l;
      if (!layer) {
        raster_layers_.push_back({r.grid, std::vector<double>(2 * r.grid.size(), 0.0),
                                  1.0 / r.grid.dx(), 1.0 / r.grid.dy(),
                                  static_cast<double>(r.grid.nx - 1),
                                  static_cast<double>(r.grid.ny - 1)});
        layer = &raster_layers_.back();
      }
      for (std::size_t i = 0; i < r.grid.size(); ++i) {
        layer->grad[2 * i] += b * r.grad_x[i];
        layer->grad[2 * i + 1] += b * r.grad_y[i];
      }
    }
    quad_slope_ = slope;
    quad_offset_ = offset;
  }

  FieldList covariates_;
  std::vector<double> beta_;
  double gamma_sq_;
  std::vector<RasterLayer> raster_layers_;
  double quad_slope_ = 0.0;
  Vec2 quad_offset_{};
};

inline double log_rsf_unnormalized(const RSFModel& m, Point2 p) { return m.log_rsf_unnormalized(p); }
inline Vec2 grad_log_rsf(const RSFModel& m, Point2 p) { return m.grad_log_rsf(p); }

}  // namespace bbis
