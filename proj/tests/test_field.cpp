#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "bbis/field.hpp"

using namespace bbis;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.x_min = -2.0;
  g.x_max = 3.0;
  g.y_min = 0.0;
  g.y_max = 4.0;
  g.nx = 6;
  g.ny = 5;
  return g;
}

CovariateField sampled(const GridSpec& g, double (*f)(double, double)) {
  std::vector<double> v(g.size());
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const Point2 p = g.node(ix, iy);
      v[g.index(ix, iy)] = f(p.x, p.y);
    }
  return CovariateField::raster(g, std::move(v));
}

}  // namespace

TEST(GridSpec, RejectsDegenerateExtents) {
  GridSpec g = small_grid();
  g.nx = 1;
  EXPECT_THROW(g.validate(), Error);
  g = small_grid();
  g.x_max = g.x_min;
  EXPECT_THROW(g.validate(), Error);
  EXPECT_THROW(CovariateField::raster(small_grid(), std::vector<double>(3, 0.0)), Error);
}

TEST(PerlinField, DeterministicInSeed) {
  const GridSpec g;  // 201 x 201 over [-100, 100]^2
  const auto a = generate_perlin_field(1, 0.05, g);
  const auto b = generate_perlin_field(1, 0.05, g);
  EXPECT_EQ(a.raster_data().values, b.raster_data().values);
  EXPECT_EQ(a.raster_data().grad_x, b.raster_data().grad_x);
  const auto c = generate_perlin_field(2, 0.05, g);
  EXPECT_NE(a.raster_data().values, c.raster_data().values);
}

TEST(PerlinField, ValuesWithinUnitRange) {
  const GridSpec g;
  for (std::uint64_t seed : {1u, 2u, 3u, 17u}) {
    const auto f = generate_perlin_field(seed, 0.05, g);
    double lo = 1.0, hi = -1.0;
    for (double v : f.raster_data().values) {
      ASSERT_TRUE(std::isfinite(v));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_GE(lo, -1.0);
    EXPECT_LE(hi, 1.0);
    // A nontrivial landscape, not a flat one.
    EXPECT_GT(hi - lo, 0.5);
  }
}

TEST(PerlinField, UnscaledNoiseRespectsClassicBound) {
  // Dense sampling of the noise itself: |n| <= 1 after the sqrt(2) rescale.
  const PerlinNoise2D noise(5);
  double worst = 0.0;
  for (int i = 0; i < 400; ++i)
    for (int j = 0; j < 400; ++j) worst = std::max(worst, std::abs(noise(i * 0.013, j * 0.017)));
  EXPECT_LE(worst, 1.0);
  EXPECT_GT(worst, 0.3);
}

TEST(PerlinField, RejectsNonPositiveFrequency) {
  EXPECT_THROW(generate_perlin_field(1, 0.0, GridSpec{}), Error);
  EXPECT_THROW(generate_perlin_field(1, -0.1, GridSpec{}), Error);
}

TEST(QuadraticField, ValueAndGradient) {
  const auto f = quadratic_distance_field({0.0, 0.0});
  EXPECT_EQ(field_value(f, {0.0, 0.0}), 0.0);
  EXPECT_EQ(field_value(f, {3.0, 4.0}), 25.0);
  EXPECT_EQ(field_gradient(f, {3.0, 4.0}), (Vec2{6.0, 8.0}));
  EXPECT_EQ(field_gradient(f, {1.0, -1.0}), (Vec2{2.0, -2.0}));
  const auto g = quadratic_distance_field({1.5, -2.0});
  EXPECT_EQ(field_value(g, {1.5, -2.0}), 0.0);
}

TEST(QuadraticField, GradientNormMatchesValue) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const auto f = quadratic_distance_field({u(rng), u(rng)});
  for (int i = 0; i < 200; ++i) {
    const Point2 p{u(rng), u(rng)};
    EXPECT_NEAR(squared_norm(f.gradient(p)), 4.0 * f.value(p), 1e-9 * (1.0 + f.value(p)));
  }
}

TEST(RasterField, NodeValuesExact) {
  const GridSpec g = small_grid();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(g.size());
  for (auto& x : v) x = n(rng);
  const auto f = CovariateField::raster(g, v);
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix)
      EXPECT_EQ(f.value(g.node(ix, iy)), v[g.index(ix, iy)]) << ix << "," << iy;
}

TEST(RasterField, PerlinNodeValuesExact) {
  const GridSpec g;
  const auto f = generate_perlin_field(4, 0.05, g);
  const auto& v = f.raster_data().values;
  for (std::size_t iy = 0; iy < g.ny; iy += 7)
    for (std::size_t ix = 0; ix < g.nx; ix += 3)
      ASSERT_EQ(f.value(g.node(ix, iy)), v[g.index(ix, iy)]);
}

TEST(RasterField, BilinearCellCenter) {
  GridSpec g;
  g.x_min = 0.0;
  g.x_max = 1.0;
  g.y_min = 0.0;
  g.y_max = 1.0;
  g.nx = 2;
  g.ny = 2;
  // Corner values (0, 0) at y = 0 and (1, 1) at y = 1.
  const auto f = CovariateField::raster(g, {0.0, 0.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(f.value({0.5, 0.5}), 0.5);
}

TEST(RasterField, ClampsOutsideDomain) {
  const GridSpec g;
  const auto f = generate_perlin_field(1, 0.05, g);
  EXPECT_EQ(f.value({g.x_max + 10.0, 0.0}), f.value({g.x_max, 0.0}));
  EXPECT_EQ(f.value({0.0, g.y_min - 1e6}), f.value({0.0, g.y_min}));
  EXPECT_EQ(f.gradient({g.x_max + 10.0, 3.3}), f.gradient({g.x_max, 3.3}));
}

TEST(RasterField, ConstantHasZeroGradient) {
  const GridSpec g = small_grid();
  const auto f = CovariateField::raster(g, std::vector<double>(g.size(), 7.0));
  EXPECT_EQ(f.gradient({0.3, 1.7}), (Vec2{0.0, 0.0}));
  EXPECT_EQ(f.gradient({-2.0, 4.0}), (Vec2{0.0, 0.0}));
}

TEST(RasterField, AffineGradientExact) {
  const GridSpec g = small_grid();
  const auto f = sampled(g, [](double x, double y) { return 2.0 * x + 3.0 * y; });
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(g.x_min, g.x_max), uy(g.y_min, g.y_max);
  for (int i = 0; i < 200; ++i) {
    const Point2 p{ux(rng), uy(rng)};
    const Vec2 grad = f.gradient(p);
    EXPECT_NEAR(grad.x, 2.0, 1e-9);
    EXPECT_NEAR(grad.y, 3.0, 1e-9);
  }
  // Edge nodes use one-sided differences, also exact on affine data.
  EXPECT_NEAR(f.gradient({g.x_min, g.y_min}).x, 2.0, 1e-9);
  EXPECT_NEAR(f.gradient({g.x_max, g.y_max}).y, 3.0, 1e-9);
}

TEST(RasterFile, RoundTripsExactly) {
  const auto f = generate_perlin_field(9, 0.05, GridSpec{});
  std::stringstream ss;
  write_raster(ss, f);
  const auto g = read_raster(ss);
  EXPECT_EQ(g.raster_data().grid, f.raster_data().grid);
  EXPECT_EQ(g.raster_data().values, f.raster_data().values);
}

TEST(RasterFile, RejectsTruncatedInput) {
  std::stringstream ss("0 1 0 1 2 2\n1 2 3\n");
  EXPECT_THROW(read_raster(ss), Error);
  std::stringstream bad("0 1 0\n");
  EXPECT_THROW(read_raster(bad), Error);
}
