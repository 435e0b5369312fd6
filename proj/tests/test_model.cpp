#include <gtest/gtest.h>

#include <random>

#include "bbis/model.hpp"

using namespace bbis;

namespace {

FieldList default_fields() {
  return make_field_list({generate_perlin_field(1, 0.05, GridSpec{}),
                          generate_perlin_field(2, 0.05, GridSpec{}),
                          quadratic_distance_field({0.0, 0.0})});
}

// Bilinear interpolation written out from the raw node array.
double reference_bilinear(const RasterData& r, Point2 p) {
  const GridSpec& g = r.grid;
  const double fx = (p.x - g.x_min) / g.dx();
  const double fy = (p.y - g.y_min) / g.dy();
  const auto ix = static_cast<std::size_t>(fx);
  const auto iy = static_cast<std::size_t>(fy);
  const double tx = fx - ix, ty = fy - iy;
  auto at = [&](std::size_t i, std::size_t j) { return r.values[j * g.nx + i]; };
  return (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
         (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1);
}

}  // namespace

TEST(RSFModel, RejectsInvalidParameters) {
  const auto f = default_fields();
  EXPECT_THROW(RSFModel(f, {1.0, 2.0}, 5.0), Error);
  EXPECT_THROW(RSFModel(f, {1.0, 2.0, 3.0}, 0.0), Error);
  EXPECT_THROW(RSFModel(f, {1.0, 2.0, 3.0}, -1.0), Error);
}

TEST(RSFModel, ZeroBetaIsFlat) {
  const RSFModel m(default_fields(), {0.0, 0.0, 0.0}, 5.0);
  for (Point2 p : {Point2{0, 0}, Point2{13.2, -40.1}, Point2{150, 150}}) {
    EXPECT_EQ(m.log_rsf_unnormalized(p), 0.0);
    EXPECT_EQ(m.grad_log_rsf(p), (Vec2{0.0, 0.0}));
  }
}

TEST(RSFModel, QuadraticOnly) {
  const RSFModel m(make_field_list({quadratic_distance_field({0, 0})}), {-0.1}, 5.0);
  EXPECT_DOUBLE_EQ(m.log_rsf_unnormalized({3.0, 4.0}), -2.5);
  const Vec2 g = m.grad_log_rsf({1.0, 0.0});
  EXPECT_DOUBLE_EQ(g.x, -0.2);
  EXPECT_DOUBLE_EQ(g.y, 0.0);
}

TEST(RSFModel, LogRsfMatchesHandSummation) {
  const auto fields = default_fields();
  const RSFModel m(fields, {4.0, 2.0, -0.1}, 5.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  for (int i = 0; i < 50; ++i) {
    const Point2 p{u(rng), u(rng)};
    const double hand = 4.0 * reference_bilinear(fields[0]->raster_data(), p) +
                        2.0 * reference_bilinear(fields[1]->raster_data(), p) -
                        0.1 * (p.x * p.x + p.y * p.y);
    EXPECT_NEAR(m.log_rsf_unnormalized(p), hand, 1e-12 * (1.0 + std::abs(hand)));
  }
}

TEST(RSFModel, GradientMatchesFiniteDifferencesOnAnalyticCovariate) {
  const RSFModel m(make_field_list({quadratic_distance_field({2.0, -3.0})}), {-0.1}, 5.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  const double step = 1e-4;
  for (int i = 0; i < 100; ++i) {
    const Point2 p{u(rng), u(rng)};
    const Vec2 g = m.grad_log_rsf(p);
    const double fx = (m.log_rsf_unnormalized({p.x + step, p.y}) -
                       m.log_rsf_unnormalized({p.x - step, p.y})) / (2 * step);
    const double fy = (m.log_rsf_unnormalized({p.x, p.y + step}) -
                       m.log_rsf_unnormalized({p.x, p.y - step})) / (2 * step);
    EXPECT_NEAR(g.x, fx, 1e-5 * std::max(1.0, std::abs(fx)));
    EXPECT_NEAR(g.y, fy, 1e-5 * std::max(1.0, std::abs(fy)));
  }
}

TEST(RSFModel, CombinedGradientMatchesPerFieldSum) {
  const auto fields = default_fields();
  const std::vector<double> beta{4.0, 2.0, -0.1};
  const RSFModel m(fields, beta, 5.0);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-120.0, 120.0);  // includes clamped points
  for (int i = 0; i < 100; ++i) {
    const Point2 p{u(rng), u(rng)};
    Vec2 sum{};
    for (std::size_t k = 0; k < fields.size(); ++k) sum += beta[k] * fields[k]->gradient(p);
    const Vec2 g = m.grad_log_rsf(p);
    EXPECT_NEAR(g.x, sum.x, 1e-12 * (1.0 + std::abs(sum.x)));
    EXPECT_NEAR(g.y, sum.y, 1e-12 * (1.0 + std::abs(sum.y)));
  }
}

TEST(RSFModel, GradientIsLinearInBeta) {
  const auto fields = default_fields();
  const RSFModel m1(fields, {4.0, 2.0, -0.1}, 5.0);
  const RSFModel m2(fields, {8.0, 4.0, -0.2}, 5.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 100; ++i) {
    const Point2 p{u(rng), u(rng)};
    EXPECT_EQ(m2.grad_log_rsf(p), 2.0 * m1.grad_log_rsf(p));
  }
}
