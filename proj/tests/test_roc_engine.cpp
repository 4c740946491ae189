#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "robroc/roc_engine.hpp"
#include "robroc/sim_lab.hpp"

using namespace robroc;

namespace {

// binormal ROC written as Phi(-a + b Phi^{-1}(p)) with boost's normal law
double binormal(double a, double b, double p) {
  const boost::math::normal_distribution<double> z;
  return boost::math::cdf(z, -a + b * boost::math::quantile(z, p));
}

PipelineConfig cfg_for(Variant v) {
  PipelineConfig c;
  c.variant = v;
  return c;
}

GeneratedData clean_linear(std::uint64_t seed, std::size_t n) {
  return generate(ScenarioSpec{ScenarioModel::Linear51, n, n, seed}, ContaminationScheme{});
}

}  // namespace

TEST(RocAt, TrueLinearModelAtZero) {
  const auto m = true_plugin_model(ScenarioModel::Linear51);
  EXPECT_NEAR(roc_at(m, 0.0, 0.5), 0.7734, 5e-5);
  EXPECT_NEAR(roc_at(m, 0.0, 0.5), binormal(-0.75, 0.75, 0.5), 1e-12);
}

TEST(RocAt, MatchesBinormalClosedFormEverywhere) {
  const auto m = true_plugin_model(ScenarioModel::Linear51);
  const auto g = default_grids(ScenarioModel::Linear51);
  for (double x : g.x_grid) {
    const double a = ((0.5 + x) - (2 + 4 * x)) / 2.0;
    for (double p : g.p_grid) EXPECT_NEAR(roc_at(m, x, p), binormal(a, 0.75, p), 1e-12) << x << ' ' << p;
  }
  const auto s = roc_surface(m, g);
  for (std::size_t i = 0; i < s.n_x(); ++i)
    for (std::size_t j = 0; j < s.n_p(); ++j) EXPECT_EQ(s.at(i, j), roc_at(m, g.x_grid[i], g.p_grid[j]));
}

TEST(RocAt, Limits) {
  const auto m = true_plugin_model(ScenarioModel::Linear51);
  for (double x : {-1.0, 0.0, 1.0}) {
    EXPECT_LT(roc_at(m, x, 1e-14), 2e-3);
    EXPECT_GT(roc_at(m, x, 1 - 1e-14), 1 - 2e-3);
    EXPECT_LT(roc_at(m, x, 1e-14), roc_at(m, x, 0.01));
    EXPECT_GT(roc_at(m, x, 1 - 1e-14), roc_at(m, x, 0.99));
  }
}

TEST(RocAt, Errors) {
  auto m = true_plugin_model(ScenarioModel::Linear51);
  EXPECT_THROW(roc_at(m, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(roc_at(m, 0.0, 1.0), std::invalid_argument);
  m.fit_D.sigma_hat = 0.0;
  EXPECT_THROW(roc_at(m, 0.0, 0.5), NumericalError);
}

TEST(RocSurface, IdenticalPopulationsGiveTheDiagonal) {
  const auto d = clean_linear(3, 150);
  for (Variant v : {Variant::Classical, Variant::Robust, Variant::Hybrid}) {
    const auto m = build_model(d.healthy, d.healthy, cfg_for(v));
    const double step = 1.0 / m.g_H.ecdf()->weight_sum();
    const auto s = roc_surface(m, default_grids(ScenarioModel::Linear51));
    for (std::size_t i = 0; i < s.n_x(); ++i)
      for (std::size_t j = 0; j < s.n_p(); ++j) EXPECT_NEAR(s.at(i, j), s.grid.p_grid[j], step + 1e-12);
    for (double a : auc_curve(s).auc) EXPECT_NEAR(a, 0.5, 0.01);
  }
}

TEST(RocSurface, ValuesInUnitIntervalAndMonotoneInP) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = generate(ScenarioSpec{ScenarioModel::Linear51, 60, 60, seed},
                            ContaminationScheme{ContaminationKind::ShiftBoth, 0.1, 0.0, false});
    for (Variant v : {Variant::Classical, Variant::Robust, Variant::Hybrid}) {
      const auto s = roc_surface(build_model(d.diseased, d.healthy, cfg_for(v)), default_grids(ScenarioModel::Linear51));
      for (std::size_t i = 0; i < s.n_x(); ++i)
        for (std::size_t j = 0; j < s.n_p(); ++j) {
          EXPECT_GE(s.at(i, j), 0.0);
          EXPECT_LE(s.at(i, j), 1.0);
          if (j > 0) EXPECT_GE(s.at(i, j), s.at(i, j - 1));
        }
      for (double a : auc_curve(s).auc) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
      }
    }
  }
}

TEST(AucCurve, BinormalClosedForm) {
  const auto m = true_plugin_model(ScenarioModel::Linear51);
  const auto auc = auc_curve(roc_surface(m, EvalGrid(default_grids(ScenarioModel::Linear51).p_grid, {0.0, 1.0})));
  const boost::math::normal_distribution<double> z;
  EXPECT_NEAR(auc.auc[0], boost::math::cdf(z, 1.5 / std::sqrt(4 + 2.25)), 0.002);
  EXPECT_NEAR(auc.auc[0], 0.7257, 0.002);
  // at x = 1 the curve is steep below p = 0.01 and the coarse rule loses ~0.0026
  EXPECT_NEAR(auc.auc[1], boost::math::cdf(z, 4.5 / 2.5), 0.004);
  const auto fine = auc_curve(roc_surface(m, EvalGrid(equidistant(1e-5, 1 - 1e-5, 1e-5), {1.0})));
  EXPECT_NEAR(fine.auc[0], 0.9641, 1e-4);
}

TEST(AucCurve, TrapezoidWithAnchors) {
  RocSurface s(EvalGrid({0.5}, {0.0}));
  s.at(0, 0) = 0.5;
  EXPECT_DOUBLE_EQ(auc_curve(s).auc[0], 0.5);
  RocSurface t(EvalGrid({0.25, 0.75}, {0.0}));
  t.at(0, 0) = 0.25;
  t.at(0, 1) = 0.75;
  EXPECT_DOUBLE_EQ(auc_curve(t).auc[0], 0.5);
}

TEST(TransformMarker, NegInvSqrt) {
  EXPECT_EQ(transform_marker(std::vector<double>{4.0}, MarkerTransform::NegInvSqrt)[0], -0.5);
  EXPECT_EQ(transform_marker(std::vector<double>{100.0}, MarkerTransform::NegInvSqrt)[0], -0.1);
  EXPECT_EQ(transform_marker(std::vector<double>{1.0}, MarkerTransform::NegInvSqrt)[0], -1.0);
  EXPECT_EQ(transform_marker(std::vector<double>{-3.0}, MarkerTransform::None)[0], -3.0);
  EXPECT_THROW(transform_marker(std::vector<double>{0.0}, MarkerTransform::NegInvSqrt), std::invalid_argument);
  const auto v = transform_marker(std::vector<double>{0.5, 2.0, 9.0, 70.0}, MarkerTransform::NegInvSqrt);
  EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
  EXPECT_EQ(parse_transform("neg_inv_sqrt"), MarkerTransform::NegInvSqrt);
  EXPECT_THROW(parse_transform("log"), std::invalid_argument);
}

TEST(Pipeline, VariantWiring) {
  const auto d = clean_linear(21, 80);
  const auto c = build_model(d.diseased, d.healthy, cfg_for(Variant::Classical));
  EXPECT_EQ(c.fit_D.method, FitMethod::LeastSquares);
  ASSERT_NE(c.g_D.ecdf(), nullptr);
  EXPECT_TRUE(std::isinf(c.g_D.ecdf()->t_n()));

  const auto r = build_model(d.diseased, d.healthy, cfg_for(Variant::Robust));
  EXPECT_EQ(r.fit_H.method, FitMethod::MMLinear);
  EXPECT_GE(r.g_H.ecdf()->t_n(), 2.5);
  EXPECT_TRUE(std::isfinite(r.g_H.ecdf()->t_n()));

  const auto h = build_model(d.diseased, d.healthy, cfg_for(Variant::Hybrid));
  EXPECT_EQ(h.fit_H.method, FitMethod::MMLinear);
  EXPECT_TRUE(std::isinf(h.g_H.ecdf()->t_n()));
  EXPECT_EQ(h.fit_H.beta_hat, r.fit_H.beta_hat);

  EXPECT_EQ(parse_variant("hybrid"), Variant::Hybrid);
  EXPECT_THROW(parse_variant("other"), std::invalid_argument);
}

TEST(Pipeline, ExponentialFamilyUsesNonlinearFit) {
  const auto d = generate(ScenarioSpec{ScenarioModel::Nonlinear52, 80, 80, 5}, ContaminationScheme{});
  PipelineConfig c = cfg_for(Variant::Robust);
  c.family = Family::Exponential;
  const auto m = build_model(d.diseased, d.healthy, c);
  EXPECT_EQ(m.fit_D.method, FitMethod::MMNonlinear);
  EXPECT_NEAR(m.fit_D.beta_hat(0), 5.0, 0.5);
  EXPECT_NEAR(m.fit_H.beta_hat(1), 1.0, 0.3);
}

TEST(Pipeline, DegenerateScaleIsReported) {
  const PopulationSample s(Population::Diseased, {1, 3, 5, 7, 9}, {0, 1, 2, 3, 4});
  EXPECT_THROW(build_model(s, s, cfg_for(Variant::Robust)), NumericalError);
}

TEST(Pipeline, SingleCleanSampleIsAccurate) {
  const auto grid = default_grids(ScenarioModel::Linear51);
  const auto truth = true_surface(ScenarioModel::Linear51, grid);
  const auto d = clean_linear(2024, 200);
  const auto s = roc_surface(build_model(d.diseased, d.healthy, cfg_for(Variant::Robust)), grid);
  EXPECT_LT(mse_metric(s, truth), 0.01);
}

TEST(Pipeline, ErrorShrinksWithSampleSize) {
  const auto grid = default_grids(ScenarioModel::Linear51);
  const auto truth = true_surface(ScenarioModel::Linear51, grid);
  auto mean_mse = [&](std::size_t n) {
    double m = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const auto d = clean_linear(seed, n);
      m += mse_metric(roc_surface(build_model(d.diseased, d.healthy, cfg_for(Variant::Robust)), grid), truth);
    }
    return m / 6;
  };
  const double small = mean_mse(100), large = mean_mse(1000);
  EXPECT_LT(large, small);
  EXPECT_LT(large, 0.002);
}

TEST(Pipeline, RobustBeatsClassicalUnderContamination) {
  const auto grid = default_grids(ScenarioModel::Linear51);
  const auto truth = true_surface(ScenarioModel::Linear51, grid);
  double rob = 0, cla = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = generate(ScenarioSpec{ScenarioModel::Linear51, 100, 100, seed},
                            ContaminationScheme{ContaminationKind::ShiftBoth, 0.1, 0.0, false});
    rob += mse_metric(roc_surface(build_model(d.diseased, d.healthy, cfg_for(Variant::Robust)), grid), truth);
    cla += mse_metric(roc_surface(build_model(d.diseased, d.healthy, cfg_for(Variant::Classical)), grid), truth);
  }
  EXPECT_LT(2 * rob, cla);
}
