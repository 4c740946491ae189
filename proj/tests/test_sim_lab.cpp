#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "robroc/sim_lab.hpp"

using namespace robroc;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

ContaminationScheme scheme(ContaminationKind k, double delta, double s = 0.0, bool line = false) {
  return ContaminationScheme{k, delta, s, line};
}

// residuals of the first m points about a given line, in units of sd
std::vector<double> offsets(const PopulationSample& s, std::size_t m, double b0, double b1, double shift, double sd) {
  std::vector<double> z;
  for (std::size_t i = 0; i < m; ++i) z.push_back((s.y()[i] - (b0 + b1 * s.x(i)[0] + shift)) / sd);
  return z;
}

CampaignConfig small_campaign(ScenarioModel model, ContaminationScheme c, std::size_t n_rep) {
  CampaignConfig cfg;
  cfg.scenario = {model, 40, 40, 17};
  cfg.contamination = c;
  cfg.variants = {Variant::Classical, Variant::Robust, Variant::Hybrid};
  cfg.n_rep = n_rep;
  cfg.grid = default_grids(model);
  cfg.keep_auc = true;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST(Generate, CleanMoments) {
  const auto d = generate(ScenarioSpec{ScenarioModel::Linear51, 400, 400, 5}, ContaminationScheme{});
  const double n = 400;
  EXPECT_EQ(d.replaced_D + d.replaced_H, 0u);
  EXPECT_NEAR(mean(d.healthy.y()), 0.5, 3 * 1.5 / std::sqrt(n));
  EXPECT_NEAR(mean(d.healthy.x_flat()), 0.0, 3 * std::sqrt(1.0 / 3.0 / n));
  EXPECT_NEAR(mean(d.diseased.y()), 2.0, 3 * std::sqrt(16.0 / 3.0 + 4.0) / std::sqrt(n));
  for (double x : d.diseased.x_flat()) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Generate, ShiftHealthyAudit) {
  const auto d = generate(ScenarioSpec{ScenarioModel::Linear51, 100, 100, 8},
                          scheme(ContaminationKind::ShiftHealthy, 0.10, 20.0));
  EXPECT_EQ(d.replaced_H, 10u);
  EXPECT_EQ(d.replaced_D, 0u);
  const auto z = offsets(d.healthy, 10, 0.5, 1.0, 30.0, 1.5);
  EXPECT_NEAR(mean(z), 0.0, 3 / std::sqrt(10.0));
  for (double v : z) EXPECT_LT(std::abs(v), 5.0);
  // the untouched rest stays near the healthy line
  const auto rest = offsets(d.healthy, 100, 0.5, 1.0, 0.0, 1.5);
  for (std::size_t i = 10; i < 100; ++i) EXPECT_LT(std::abs(rest[i]), 5.0);
}

TEST(Generate, ShiftBothAudit) {
  const auto d = generate(ScenarioSpec{ScenarioModel::Linear51, 100, 100, 9}, scheme(ContaminationKind::ShiftBoth, 0.05));
  EXPECT_EQ(d.replaced_D, 5u);
  EXPECT_EQ(d.replaced_H, 5u);
  for (double v : offsets(d.diseased, 5, 2.0, 4.0, 40.0, 2.0)) EXPECT_LT(std::abs(v), 5.0);
  for (double v : offsets(d.healthy, 5, 0.5, 1.0, 22.5, 1.5)) EXPECT_LT(std::abs(v), 5.0);
}

TEST(Generate, ShiftDiseasedAsPrintedAndAlongItsOwnLine) {
  const auto a = generate(ScenarioSpec{ScenarioModel::Linear51, 100, 100, 2},
                          scheme(ContaminationKind::ShiftDiseased, 0.10, 10.0));
  for (double v : offsets(a.diseased, 10, 0.5, 1.0, 20.0, 2.0)) EXPECT_LT(std::abs(v), 5.0);
  const auto b = generate(ScenarioSpec{ScenarioModel::Linear51, 100, 100, 2},
                          scheme(ContaminationKind::ShiftDiseased, 0.10, 10.0, true));
  for (double v : offsets(b.diseased, 10, 2.0, 4.0, 20.0, 2.0)) EXPECT_LT(std::abs(v), 5.0);
  EXPECT_EQ(a.healthy.y(), b.healthy.y());
}

TEST(Generate, NonlinearShiftAudit) {
  const auto d = generate(ScenarioSpec{ScenarioModel::Nonlinear52, 100, 100, 4},
                          scheme(ContaminationKind::NonlinearShift, 0.05, 10.0));
  ASSERT_EQ(d.replaced_D, 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    const double x = d.diseased.x(i)[0];
    EXPECT_GE(x, 0.49);
    EXPECT_LE(x, 0.5);
    EXPECT_NEAR(d.diseased.y()[i] - 5 * std::exp(2 * x), 10.0, 0.1);
    const double xh = d.healthy.x(i)[0];
    EXPECT_NEAR(d.healthy.y()[i] - 3 * std::exp(xh), 10.0, 0.1);
  }
}

TEST(Generate, CleanPartDoesNotDependOnScheme) {
  const ScenarioSpec sc{ScenarioModel::Linear51, 50, 50, 33};
  const auto clean = generate(sc, ContaminationScheme{});
  const auto dirty = generate(sc, scheme(ContaminationKind::ShiftBoth, 0.1));
  for (std::size_t i = 5; i < 50; ++i) EXPECT_EQ(clean.healthy.y()[i], dirty.healthy.y()[i]);
}

TEST(Generate, RejectsMismatchedSchemes) {
  EXPECT_THROW(generate(ScenarioSpec{ScenarioModel::Linear51, 10, 10, 0}, scheme(ContaminationKind::NonlinearShift, 0.1)),
               std::invalid_argument);
  EXPECT_THROW(generate(ScenarioSpec{ScenarioModel::Nonlinear52, 10, 10, 0}, scheme(ContaminationKind::ShiftBoth, 0.1)),
               std::invalid_argument);
  EXPECT_THROW(scheme(ContaminationKind::ShiftBoth, 1.0).validate(ScenarioModel::Linear51), std::invalid_argument);
}

TEST(Metrics, HandValues) {
  const EvalGrid g({0.25, 0.75}, {0.0, 1.0});
  RocSurface truth(g), est(g);
  truth.values = {0.3, 0.6, 0.4, 0.8};
  EXPECT_EQ(mse_metric(truth, truth), 0.0);
  EXPECT_EQ(ks_metric(truth, truth), 0.0);
  est.values = {0.4, 0.7, 0.5, 0.9};
  EXPECT_NEAR(mse_metric(est, truth), 0.01, 1e-15);
  EXPECT_NEAR(ks_metric(est, truth), 0.1, 1e-15);
  est = truth;
  est.at(1, 0) += 0.5;
  EXPECT_DOUBLE_EQ(mse_metric(est, truth), 0.0625);
  EXPECT_DOUBLE_EQ(ks_metric(est, truth), 0.5);
  EXPECT_THROW(mse_metric(RocSurface(EvalGrid({0.5}, {0.0})), truth), std::invalid_argument);
}

TEST(TrueSurface, KnownValues) {
  const EvalGrid g({0.5}, {0.0});
  EXPECT_NEAR(true_surface(ScenarioModel::Linear51, g).at(0, 0), 0.7734, 5e-5);
  EXPECT_NEAR(true_surface(ScenarioModel::Nonlinear52, g).at(0, 0), 0.97725, 5e-5);
  EXPECT_NEAR(true_surface(ScenarioModel::Nonlinear52, g).at(0, 0), 0.5 * std::erfc(-2 / std::sqrt(2.0)), 1e-14);
}

TEST(TrueSurface, PluginModelAgrees) {
  for (auto model : {ScenarioModel::Linear51, ScenarioModel::Nonlinear52}) {
    const auto g = default_grids(model);
    const auto a = true_surface(model, g);
    const auto b = roc_surface(true_plugin_model(model), g);
    EXPECT_LT(ks_metric(a, b), 1e-12);
  }
}

TEST(Seeds, ReplicationSeedsAreDistinct) {
  std::vector<std::uint64_t> s;
  for (std::size_t r = 0; r < 1000; ++r) s.push_back(replication_seed(42, r));
  std::sort(s.begin(), s.end());
  EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
  EXPECT_NE(replication_seed(42, 0), replication_seed(43, 0));
}

TEST(Campaign, DeterministicAcrossRunsAndThreadCounts) {
  auto cfg = small_campaign(ScenarioModel::Linear51, scheme(ContaminationKind::ShiftHealthy, 0.1, 10.0), 6);
  const auto a = run_campaign(cfg);
  const auto b = run_campaign(cfg);
  cfg.threads = 3;
  const auto c = run_campaign(cfg);
  for (std::size_t k = 0; k < a.variants.size(); ++k) {
    EXPECT_EQ(a.variants[k].mse, b.variants[k].mse);
    EXPECT_EQ(a.variants[k].mse, c.variants[k].mse);
    EXPECT_EQ(a.variants[k].ks, c.variants[k].ks);
    EXPECT_EQ(a.variants[k].auc, c.variants[k].auc);
  }
}

TEST(Campaign, MetricInvariants) {
  const auto r = run_campaign(small_campaign(ScenarioModel::Linear51, scheme(ContaminationKind::ShiftBoth, 0.1), 5));
  EXPECT_EQ(r.n_rep, 5u);
  ASSERT_EQ(r.variants.size(), 3u);
  for (const auto& v : r.variants) {
    ASSERT_EQ(v.mse.size(), 5u);
    ASSERT_EQ(v.auc.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_GE(v.mse[i], 0.0);
      EXPECT_LE(v.ks[i], 1.0);
      EXPECT_LE(v.mse[i], v.ks[i] * v.ks[i] + 1e-15);
      EXPECT_EQ(v.auc[i].size(), r.grid.x_grid.size());
    }
    EXPECT_LE(v.mean_mse, v.mean_ks);
  }
  EXPECT_THROW(r[Variant::Robust].mse.at(5), std::out_of_range);
}

TEST(Campaign, SingleReplicationNonlinear) {
  auto cfg = small_campaign(ScenarioModel::Nonlinear52, ContaminationScheme{}, 1);
  cfg.variants = {Variant::Robust};
  const auto a = run_campaign(cfg);
  const auto b = run_campaign(cfg);
  EXPECT_EQ(a[Variant::Robust].mse, b[Variant::Robust].mse);
  EXPECT_LT(a[Variant::Robust].mean_mse, 0.05);
  EXPECT_THROW(a[Variant::Classical], std::out_of_range);
}

TEST(Campaign, Validation) {
  auto cfg = small_campaign(ScenarioModel::Linear51, ContaminationScheme{}, 0);
  EXPECT_THROW(run_campaign(cfg), std::invalid_argument);
  cfg.n_rep = 1;
  cfg.variants.clear();
  EXPECT_THROW(run_campaign(cfg), std::invalid_argument);
}

TEST(Parsing, Names) {
  EXPECT_EQ(parse_scenario_model("linear51"), ScenarioModel::Linear51);
  EXPECT_EQ(parse_scenario_model("exponential"), ScenarioModel::Nonlinear52);
  EXPECT_EQ(parse_contamination("shift_both"), ContaminationKind::ShiftBoth);
  EXPECT_THROW(parse_contamination("shift"), std::invalid_argument);
}
