#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "robroc/model_core.hpp"

using namespace robroc;

namespace {

RobustFit line_fit(double b0, double b1, double sigma) {
  RobustFit f;
  f.spec = RegressionSpec::linear(1, true);
  f.beta_hat = Vector{{b0, b1}};
  f.sigma_hat = sigma;
  return f;
}

}  // namespace

TEST(PopulationSample, RejectsBadShapes) {
  EXPECT_THROW(PopulationSample(Population::Healthy, {}, {}), std::invalid_argument);
  EXPECT_THROW(PopulationSample(Population::Healthy, {1.0, 2.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(PopulationSample(Population::Healthy, {NAN}, {0.0}), std::invalid_argument);
  EXPECT_THROW(PopulationSample(Population::Healthy, {1.0}, {INFINITY}), std::invalid_argument);
  const PopulationSample s(Population::Diseased, {1.0, 2.0}, {0.1, 0.2, 0.3, 0.4}, 2);
  EXPECT_EQ(s.dim(), 2u);
  EXPECT_DOUBLE_EQ(s.x(1)[0], 0.3);
}

TEST(StandardizedResiduals, ExactFitGivesZero) {
  const PopulationSample s(Population::Healthy, {3.0}, {1.0});
  const auto r = standardized_residuals(s, line_fit(1, 2, 1));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.r[0], 0.0);
}

TEST(StandardizedResiduals, ScaleDivides) {
  const PopulationSample s(Population::Healthy, {5.0}, {1.0});
  EXPECT_DOUBLE_EQ(standardized_residuals(s, line_fit(1, 2, 2)).r[0], 1.0);
}

TEST(StandardizedResiduals, InvertsTrueHealthyModel) {
  for (double z : {-2.3, 0.0, 0.7, 4.1}) {
    const PopulationSample s(Population::Healthy, {0.5 + 1.0 * 0.3 + 1.5 * z}, {0.3});
    EXPECT_NEAR(standardized_residuals(s, line_fit(0.5, 1.0, 1.5)).r[0], z, 1e-14);
  }
}

TEST(StandardizedResiduals, Errors) {
  const PopulationSample s(Population::Healthy, {1.0}, {1.0});
  EXPECT_THROW(standardized_residuals(s, line_fit(0, 1, 0.0)), NumericalError);
  EXPECT_THROW(standardized_residuals(s, line_fit(NAN, 1, 1.0)), NumericalError);
  RobustFit wrong = line_fit(0, 1, 1);
  wrong.spec = RegressionSpec::linear(2, true);
  EXPECT_THROW(standardized_residuals(s, wrong), std::invalid_argument);
}

// shifting y by a constant and rescaling moves residuals predictably
TEST(StandardizedResiduals, AffineEquivariance) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<double> y(50), x(50);
  for (std::size_t i = 0; i < y.size(); ++i) {
    x[i] = g(rng);
    y[i] = 1 + 2 * x[i] + g(rng);
  }
  const PopulationSample s(Population::Diseased, y, x);
  const auto base = standardized_residuals(s, line_fit(1, 2, 1.3));
  std::vector<double> y2(y);
  for (double& v : y2) v = 3.0 * v + 4.0;
  const auto moved = standardized_residuals(s.with_y(y2), line_fit(7, 6, 3.9));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(moved.r[i], base.r[i], 1e-12);
}

TEST(RegressionSpec, Families) {
  const auto lin = RegressionSpec::linear(2, true);
  EXPECT_EQ(lin.coef_dim, 3u);
  const double x[2] = {2.0, -1.0};
  EXPECT_DOUBLE_EQ(lin(x, Vector{{1.0, 3.0, 5.0}}), 1 + 6 - 5);
  const auto noint = RegressionSpec::linear(1, false);
  EXPECT_EQ(noint.coef_dim, 1u);
  const auto ex = RegressionSpec::exponential();
  EXPECT_EQ(ex.coef_dim, 2u);
  const double x1 = 0.5;
  EXPECT_DOUBLE_EQ(ex(std::span<const double>(&x1, 1), Vector{{5.0, 2.0}}), 5.0 * std::exp(1.0));
}

TEST(EvalGrid, DefaultLinearGrid) {
  const auto g = default_grids(ScenarioModel::Linear51);
  ASSERT_EQ(g.p_grid.size(), 99u);
  EXPECT_DOUBLE_EQ(g.p_grid.front(), 0.01);
  EXPECT_DOUBLE_EQ(g.p_grid.back(), 0.99);
  EXPECT_DOUBLE_EQ(g.x_grid.front(), -1.0);
  EXPECT_DOUBLE_EQ(g.x_grid.back(), 1.0);
  EXPECT_EQ(g.x_grid.size(), 41u);
  EXPECT_NEAR(g.x_grid[1] - g.x_grid[0], 0.05, 1e-12);
}

TEST(EvalGrid, DefaultNonlinearGrid) {
  const auto g = default_grids(ScenarioModel::Nonlinear52);
  EXPECT_DOUBLE_EQ(g.x_grid.front(), 0.0);
  EXPECT_DOUBLE_EQ(g.x_grid.back(), 1.0);
  EXPECT_EQ(g.p_grid.size(), 99u);
}

TEST(EvalGrid, Validation) {
  EXPECT_THROW(EvalGrid({0.0, 0.5}, {0.0}), std::invalid_argument);
  EXPECT_THROW(EvalGrid({0.5, 1.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(EvalGrid({0.6, 0.5}, {0.0}), std::invalid_argument);
  EXPECT_THROW(EvalGrid({0.5}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_NO_THROW(EvalGrid({0.5}, {1.0}));
}
