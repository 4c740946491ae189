#ifndef ROBROC_SIM_LAB_HPP
#define ROBROC_SIM_LAB_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "robroc/model_core.hpp"
#include "robroc/normal.hpp"
#include "robroc/roc_engine.hpp"

namespace robroc {

inline const char* to_string(ScenarioModel m) { return m == ScenarioModel::Linear51 ? "linear51" : "nonlinear52"; }

inline ScenarioModel parse_scenario_model(std::string_view s) {
  if (s == "linear51" || s == "linear") return ScenarioModel::Linear51;
  if (s == "nonlinear52" || s == "exponential") return ScenarioModel::Nonlinear52;
  throw std::invalid_argument("unknown scenario model '" + std::string(s) + "'");
}

struct ScenarioSpec {
  ScenarioModel model = ScenarioModel::Linear51;
  std::size_t n_D = 100;
  std::size_t n_H = 100;
  std::uint64_t seed = 0;
};

/// True location-scale parameters of one population under a scenario.
struct TruePopulation {
  Vector beta;
  double sigma = 1.0;
  double x_lo = 0.0;
  double x_hi = 1.0;
};

struct TrueModel {
  ScenarioModel model;
  TruePopulation diseased;
  TruePopulation healthy;

  RegressionSpec spec() const {
    return model == ScenarioModel::Linear51 ? RegressionSpec::linear(1, true) : RegressionSpec::exponential();
  }
  double mean(const TruePopulation& pop, double x) const { return spec()(std::span<const double>(&x, 1), pop.beta); }
};

inline TrueModel true_model(ScenarioModel model) {
  TrueModel t{model, {}, {}};
  if (model == ScenarioModel::Linear51) {
    t.diseased = {Vector{{2.0, 4.0}}, 2.0, -1.0, 1.0};
    t.healthy = {Vector{{0.5, 1.0}}, 1.5, -1.0, 1.0};
  } else {
    t.diseased = {Vector{{5.0, 2.0}}, 1.0, 0.0, 1.0};
    t.healthy = {Vector{{3.0, 1.0}}, 1.0, 0.0, 1.0};
  }
  return t;
}

enum class ContaminationKind { None, ShiftHealthy, ShiftDiseased, ShiftBoth, NonlinearShift };

inline const char* to_string(ContaminationKind k) {
  switch (k) {
    case ContaminationKind::None: return "none";
    case ContaminationKind::ShiftHealthy: return "shift_healthy";
    case ContaminationKind::ShiftDiseased: return "shift_diseased";
    case ContaminationKind::ShiftBoth: return "shift_both";
    case ContaminationKind::NonlinearShift: return "nonlinear_shift";
  }
  return "?";
}

inline ContaminationKind parse_contamination(std::string_view s) {
  for (auto k : {ContaminationKind::None, ContaminationKind::ShiftHealthy, ContaminationKind::ShiftDiseased,
                 ContaminationKind::ShiftBoth, ContaminationKind::NonlinearShift})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown contamination '" + std::string(s) + "'");
}

struct ContaminationScheme {
  ContaminationKind kind = ContaminationKind::None;
  double delta = 0.0;
  double shift_S = 0.0;
  // ShiftDiseased around 2 + 4x instead of the healthy line 0.5 + x.
  bool diseased_line = false;

  void validate(ScenarioModel model) const {
    if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("contamination proportion must lie in [0,1)");
    const bool linear_kind = kind == ContaminationKind::ShiftHealthy || kind == ContaminationKind::ShiftDiseased ||
                             kind == ContaminationKind::ShiftBoth;
    if (linear_kind && model != ScenarioModel::Linear51)
      throw std::invalid_argument(std::string(to_string(kind)) + " contamination requires the linear51 scenario");
    if (kind == ContaminationKind::NonlinearShift && model != ScenarioModel::Nonlinear52)
      throw std::invalid_argument("nonlinear_shift contamination requires the nonlinear52 scenario");
  }

  std::size_t replaced(std::size_t n) const {
    if (kind == ContaminationKind::None) return 0;
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * delta + 1e-9));
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent engine for (seed, stream).
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { CleanD = 0, CleanH = 1, DirtyD = 2, DirtyH = 3, InitD = 4, InitH = 5, FitSeeds = 6 };

}  // namespace detail

/// Seed of replication `rep` in a campaign seeded with `seed`.
inline std::uint64_t replication_seed(std::uint64_t seed, std::size_t rep) {
  return detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(rep) + 0x632be59bd9b4e019ULL));
}

struct GeneratedData {
  PopulationSample diseased;
  PopulationSample healthy;
  std::size_t replaced_D = 0;
  std::size_t replaced_H = 0;
};

/// Draws both samples; the first m observations of each contaminated
/// population are replaced. Clean draws and replacement draws come from
/// separate streams, so the clean part does not depend on the scheme.
inline GeneratedData generate(const ScenarioSpec& sc, const ContaminationScheme& cont) {
  cont.validate(sc.model);
  if (sc.n_D == 0 || sc.n_H == 0) throw std::invalid_argument("sample sizes must be positive");
  const TrueModel tm = true_model(sc.model);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto draw_clean = [&](const TruePopulation& pop, std::size_t n, std::uint64_t stream, std::vector<double>& x,
                        std::vector<double>& y) {
    auto rng = detail::stream_rng(sc.seed, stream);
    std::uniform_real_distribution<double> ux(pop.x_lo, pop.x_hi);
    x.resize(n);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ux(rng);
      y[i] = tm.mean(pop, x[i]) + pop.sigma * gauss(rng);
    }
  };

  std::vector<double> xd, yd, xh, yh;
  draw_clean(tm.diseased, sc.n_D, detail::CleanD, xd, yd);
  draw_clean(tm.healthy, sc.n_H, detail::CleanH, xh, yh);

  const bool hit_D = cont.kind == ContaminationKind::ShiftDiseased || cont.kind == ContaminationKind::ShiftBoth ||
                     cont.kind == ContaminationKind::NonlinearShift;
  const bool hit_H = cont.kind == ContaminationKind::ShiftHealthy || cont.kind == ContaminationKind::ShiftBoth ||
                     cont.kind == ContaminationKind::NonlinearShift;
  const std::size_t m_D = hit_D ? std::min(cont.replaced(sc.n_D), sc.n_D) : 0;
  const std::size_t m_H = hit_H ? std::min(cont.replaced(sc.n_H), sc.n_H) : 0;

  const TruePopulation& D = tm.diseased;
  const TruePopulation& H = tm.healthy;
  auto contaminate = [&](bool diseased, std::size_t m, std::vector<double>& x, std::vector<double>& y) {
    auto rng = detail::stream_rng(sc.seed, diseased ? detail::DirtyD : detail::DirtyH);
    std::uniform_real_distribution<double> narrow(0.49, 0.5);
    for (std::size_t i = 0; i < m; ++i) {
      switch (cont.kind) {
        case ContaminationKind::ShiftHealthy:
          y[i] = 0.5 + x[i] + cont.shift_S * H.sigma + H.sigma * gauss(rng);
          break;
        case ContaminationKind::ShiftDiseased: {
          const double line = cont.diseased_line ? tm.mean(D, x[i]) : 0.5 + x[i];
          y[i] = line + cont.shift_S * D.sigma + D.sigma * gauss(rng);
          break;
        }
        case ContaminationKind::ShiftBoth:
          y[i] = diseased ? 2.0 + 4.0 * x[i] + 20.0 * D.sigma + D.sigma * gauss(rng)
                          : 0.5 + x[i] + 15.0 * H.sigma + H.sigma * gauss(rng);
          break;
        case ContaminationKind::NonlinearShift: {
          x[i] = narrow(rng);
          const double z = cont.shift_S + 0.01 * gauss(rng);
          y[i] = tm.mean(diseased ? D : H, x[i]) + z + 0.01 * gauss(rng);
          break;
        }
        case ContaminationKind::None: break;
      }
    }
  };
  contaminate(true, m_D, xd, yd);
  contaminate(false, m_H, xh, yh);

  return GeneratedData{PopulationSample(Population::Diseased, std::move(yd), std::move(xd)),
                       PopulationSample(Population::Healthy, std::move(yh), std::move(xh)), m_D, m_H};
}

/// Closed-form binormal surface of the scenario's true model.
inline RocSurface true_surface(ScenarioModel model, const EvalGrid& grid) {
  grid.validate();
  const TrueModel tm = true_model(model);
  RocSurface s(grid);
  const double b = tm.healthy.sigma / tm.diseased.sigma;
  for (std::size_t i = 0; i < s.n_x(); ++i) {
    const double x = grid.x_grid[i];
    const double a = (tm.mean(tm.healthy, x) - tm.mean(tm.diseased, x)) / tm.diseased.sigma;
    for (std::size_t j = 0; j < s.n_p(); ++j)
      s.at(i, j) = 1.0 - normal::cdf(a + b * normal::quantile(1.0 - grid.p_grid[j]));
  }
  return s;
}

inline RocSurface true_surface(const ScenarioSpec& sc, const EvalGrid& grid) { return true_surface(sc.model, grid); }

/// Plug-in model at the true parameters with exact standard-normal errors.
inline ConditionalRocModel true_plugin_model(ScenarioModel model) {
  const TrueModel tm = true_model(model);
  auto make_fit = [&](const TruePopulation& pop) {
    RobustFit f;
    f.spec = tm.spec();
    f.beta_hat = pop.beta;
    f.sigma_hat = pop.sigma;
    f.converged = true;
    return f;
  };
  return ConditionalRocModel{make_fit(tm.diseased), make_fit(tm.healthy), ReferenceDistribution::standard_normal(),
                             ReferenceDistribution::standard_normal(), Variant::Robust};
}

inline void check_same_grid(const RocSurface& a, const RocSurface& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size())
    throw std::invalid_argument("surfaces are defined on different grids");
}

inline double mse_metric(const RocSurface& est, const RocSurface& truth) {
  check_same_grid(est, truth);
  double sum = 0.0;
  for (std::size_t k = 0; k < est.values.size(); ++k) {
    const double d = est.values[k] - truth.values[k];
    sum += d * d;
  }
  return sum / static_cast<double>(est.values.size());
}

inline double ks_metric(const RocSurface& est, const RocSurface& truth) {
  check_same_grid(est, truth);
  double m = 0.0;
  for (std::size_t k = 0; k < est.values.size(); ++k) m = std::max(m, std::abs(est.values[k] - truth.values[k]));
  return m;
}

struct CampaignConfig {
  ScenarioSpec scenario;
  ContaminationScheme contamination;
  std::vector<Variant> variants{Variant::Classical, Variant::Robust};
  std::size_t n_rep = 200;
  EvalGrid grid;
  MMConfig mm;
  std::optional<WeightKind> weight_kind;
  double eta = 2.5;
  std::size_t threads = 0;  // 0: hardware concurrency
  bool keep_auc = false;

  PipelineConfig pipeline(Variant v) const {
    PipelineConfig p;
    p.variant = v;
    p.family = scenario.model == ScenarioModel::Linear51 ? Family::Linear : Family::Exponential;
    p.intercept = true;
    p.mm = mm;
    p.weight_kind = weight_kind;
    p.eta = eta;
    return p;
  }
};

struct VariantMetrics {
  Variant variant = Variant::Robust;
  double mean_mse = 0.0;
  double mean_ks = 0.0;
  std::vector<double> mse;
  std::vector<double> ks;
  std::vector<std::vector<double>> auc;  // [replication][x]
  std::size_t nonconverged = 0;
};

struct MetricsReport {
  ScenarioSpec scenario;
  ContaminationScheme contamination;
  std::size_t n_rep = 0;
  EvalGrid grid;
  std::vector<VariantMetrics> variants;

  const VariantMetrics& operator[](Variant v) const {
    for (const auto& m : variants)
      if (m.variant == v) return m;
    throw std::out_of_range(std::string("variant not in report: ") + to_string(v));
  }
};

namespace detail {

struct ReplicationResult {
  std::vector<double> mse, ks;
  std::vector<std::vector<double>> auc;
  std::vector<std::size_t> nonconverged;
};

/// Nonlinear fits start at the truth perturbed by up to +-20% per coefficient.
inline Vector perturbed_truth(const Vector& beta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  Vector b = beta;
  for (Eigen::Index j = 0; j < b.size(); ++j) b(j) *= 1.0 + u(rng);
  return b;
}

inline ReplicationResult run_replication(const CampaignConfig& cfg, std::size_t rep, const RocSurface& truth) {
  const std::uint64_t seed = replication_seed(cfg.scenario.seed, rep);
  ScenarioSpec sc = cfg.scenario;
  sc.seed = seed;
  const GeneratedData data = generate(sc, cfg.contamination);
  const TrueModel tm = true_model(sc.model);
  const bool nonlinear = sc.model == ScenarioModel::Nonlinear52;

  auto seeds = stream_rng(seed, FitSeeds);
  const std::uint64_t seed_D = seeds(), seed_H = seeds();
  auto init_rng_D = stream_rng(seed, InitD);
  auto init_rng_H = stream_rng(seed, InitH);

  auto fit_one = [&](const PopulationSample& s, const TruePopulation& pop, std::uint64_t fit_seed,
                     std::mt19937_64& init_rng, Variant v, std::size_t& nonconv) {
    PipelineConfig pc = cfg.pipeline(v);
    pc.mm.seed = fit_seed;
    if (!nonlinear) {
      RobustFit f = fit_population(s, pc);
      if (!f.converged) ++nonconv;
      return f;
    }
    RobustFit f = fit_population(s, pc, perturbed_truth(pop.beta, init_rng));
    if (!f.converged) f = fit_population(s, pc, perturbed_truth(pop.beta, init_rng));
    if (!f.converged) ++nonconv;
    return f;
  };

  ReplicationResult out;
  out.nonconverged.assign(cfg.variants.size(), 0);
  std::optional<RobustFit> mm_D, mm_H;
  std::size_t mm_nonconv = 0;
  for (std::size_t k = 0; k < cfg.variants.size(); ++k) {
    const Variant v = cfg.variants[k];
    const PipelineConfig pc = cfg.pipeline(v);
    RobustFit fD, fH;
    if (v == Variant::Classical) {
      auto rD = stream_rng(seed, InitD), rH = stream_rng(seed, InitH);
      fD = fit_one(data.diseased, tm.diseased, seed_D, rD, v, out.nonconverged[k]);
      fH = fit_one(data.healthy, tm.healthy, seed_H, rH, v, out.nonconverged[k]);
    } else {
      if (!mm_D) {
        mm_D = fit_one(data.diseased, tm.diseased, seed_D, init_rng_D, Variant::Robust, mm_nonconv);
        mm_H = fit_one(data.healthy, tm.healthy, seed_H, init_rng_H, Variant::Robust, mm_nonconv);
      }
      fD = *mm_D;
      fH = *mm_H;
      out.nonconverged[k] = mm_nonconv;
    }
    const ConditionalRocModel model = assemble_model(data.diseased, std::move(fD), data.healthy, std::move(fH), v, pc);
    const RocSurface est = roc_surface(model, cfg.grid);
    out.mse.push_back(mse_metric(est, truth));
    out.ks.push_back(ks_metric(est, truth));
    if (cfg.keep_auc) out.auc.push_back(auc_curve(est).auc);
  }
  return out;
}

}  // namespace detail

/// Monte Carlo campaign. Replications run on a worker pool; aggregation is
/// in replication order, so results do not depend on the thread count.
inline MetricsReport run_campaign(const CampaignConfig& cfg) {
  if (cfg.n_rep < 1) throw std::invalid_argument("n_rep must be >= 1");
  if (cfg.variants.empty()) throw std::invalid_argument("at least one variant is required");
  cfg.grid.validate();
  cfg.contamination.validate(cfg.scenario.model);
  cfg.mm.validate();

  const RocSurface truth = true_surface(cfg.scenario.model, cfg.grid);
  std::vector<detail::ReplicationResult> results(cfg.n_rep);
  std::vector<std::exception_ptr> errors(cfg.n_rep);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t rep = next++; rep < cfg.n_rep; rep = next++) {
      try {
        results[rep] = detail::run_replication(cfg, rep, truth);
      } catch (...) {
        errors[rep] = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.n_rep);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t rep = 0; rep < cfg.n_rep; ++rep) {
    if (!errors[rep]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[rep]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw NumericalError("replication " + std::to_string(rep) + " (seed " +
                         std::to_string(replication_seed(cfg.scenario.seed, rep)) + ") failed: " + what);
  }

  MetricsReport report;
  report.scenario = cfg.scenario;
  report.contamination = cfg.contamination;
  report.n_rep = cfg.n_rep;
  report.grid = cfg.grid;
  for (std::size_t k = 0; k < cfg.variants.size(); ++k) {
    VariantMetrics vm;
    vm.variant = cfg.variants[k];
    double sum_mse = 0.0, sum_ks = 0.0;
    for (auto& r : results) {
      vm.mse.push_back(r.mse[k]);
      vm.ks.push_back(r.ks[k]);
      sum_mse += r.mse[k];
      sum_ks += r.ks[k];
      vm.nonconverged += r.nonconverged[k];
      if (cfg.keep_auc) vm.auc.push_back(std::move(r.auc[k]));
    }
    vm.mean_mse = sum_mse / static_cast<double>(cfg.n_rep);
    vm.mean_ks = sum_ks / static_cast<double>(cfg.n_rep);
    report.variants.push_back(std::move(vm));
  }
  return report;
}

}  // namespace robroc

#endif  // ROBROC_SIM_LAB_HPP
