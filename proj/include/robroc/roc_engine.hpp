#ifndef ROBROC_ROC_ENGINE_HPP
#define ROBROC_ROC_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "robroc/adaptive_weights.hpp"
#include "robroc/model_core.hpp"
#include "robroc/robust_regression.hpp"

namespace robroc {

enum class Variant { Classical, Robust, Hybrid };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Classical: return "classical";
    case Variant::Robust: return "robust";
    case Variant::Hybrid: return "hybrid";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "classical") return Variant::Classical;
  if (s == "robust") return Variant::Robust;
  if (s == "hybrid") return Variant::Hybrid;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

/// Estimate of a standardized error law: a (weighted) step ECDF, or an exact
/// reference law when evaluating at the true model.
class ErrorDistribution {
public:
  ErrorDistribution(WeightedEcdf ecdf) : impl_(std::move(ecdf)) {}  // NOLINT(google-explicit-constructor)
  ErrorDistribution(ReferenceDistribution exact) : impl_(std::move(exact)) {}  // NOLINT

  double cdf(double t) const {
    return std::visit([t](const auto& d) { return d.cdf(t); }, impl_);
  }

  double quantile(double p) const {
    if (const auto* e = std::get_if<WeightedEcdf>(&impl_)) return e->quantile(p);
    return std::get<ReferenceDistribution>(impl_).quantile(p);
  }

  const WeightedEcdf* ecdf() const { return std::get_if<WeightedEcdf>(&impl_); }

private:
  std::variant<WeightedEcdf, ReferenceDistribution> impl_;
};

struct ConditionalRocModel {
  RobustFit fit_D;
  RobustFit fit_H;
  ErrorDistribution g_D;
  ErrorDistribution g_H;
  Variant variant = Variant::Robust;
};

/// Conditional ROC values on an x-by-p grid, stored row-major (row = x).
struct RocSurface {
  EvalGrid grid;
  std::vector<double> values;

  RocSurface() = default;
  explicit RocSurface(EvalGrid g) : grid(std::move(g)), values(grid.x_grid.size() * grid.p_grid.size(), 0.0) {}

  std::size_t n_x() const { return grid.x_grid.size(); }
  std::size_t n_p() const { return grid.p_grid.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * n_p() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_p() + j]; }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(values).subspan(i * n_p(), n_p()); }

  bool operator==(const RocSurface&) const = default;
};

struct AucCurve {
  std::vector<double> x_grid;
  std::vector<double> auc;
};

/// 1 - G_D((mu_H(x) - mu_D(x)) / sigma_D + (sigma_H / sigma_D) G_H^{-1}(1 - p)).
inline double roc_at(const ConditionalRocModel& m, std::span<const double> x, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
  if (!(m.fit_D.sigma_hat > 0.0) || !(m.fit_H.sigma_hat > 0.0))
    throw NumericalError("conditional ROC needs positive residual scales");
  const double sd = m.fit_D.sigma_hat, sh = m.fit_H.sigma_hat;
  const double arg = (m.fit_H.mean_at(x) - m.fit_D.mean_at(x)) / sd + (sh / sd) * m.g_H.quantile(1.0 - p);
  return std::clamp(1.0 - m.g_D.cdf(arg), 0.0, 1.0);
}

inline double roc_at(const ConditionalRocModel& m, double x, double p) {
  return roc_at(m, std::span<const double>(&x, 1), p);
}

inline RocSurface roc_surface(const ConditionalRocModel& m, const EvalGrid& grid) {
  grid.validate();
  RocSurface s(grid);
  for (std::size_t i = 0; i < s.n_x(); ++i)
    for (std::size_t j = 0; j < s.n_p(); ++j) s.at(i, j) = roc_at(m, grid.x_grid[i], grid.p_grid[j]);
  return s;
}

/// Trapezoid rule over the p grid, anchored at ROC(0) = 0 and ROC(1) = 1.
inline AucCurve auc_curve(const RocSurface& s) {
  const auto& p = s.grid.p_grid;
  AucCurve out;
  out.x_grid = s.grid.x_grid;
  out.auc.reserve(s.n_x());
  for (std::size_t i = 0; i < s.n_x(); ++i) {
    const auto r = s.row(i);
    double area = 0.5 * p.front() * r.front();
    for (std::size_t j = 1; j < r.size(); ++j) area += 0.5 * (p[j] - p[j - 1]) * (r[j] + r[j - 1]);
    area += 0.5 * (1.0 - p.back()) * (r.back() + 1.0);
    out.auc.push_back(std::clamp(area, 0.0, 1.0));
  }
  return out;
}

enum class MarkerTransform { None, NegInvSqrt };

inline MarkerTransform parse_transform(std::string_view s) {
  if (s == "none") return MarkerTransform::None;
  if (s == "neg_inv_sqrt") return MarkerTransform::NegInvSqrt;
  throw std::invalid_argument("unknown marker transform '" + std::string(s) + "'");
}

/// Strictly increasing marker transform; NegInvSqrt maps t to -1/sqrt(t).
inline std::vector<double> transform_marker(std::span<const double> y, MarkerTransform kind) {
  std::vector<double> out(y.begin(), y.end());
  if (kind == MarkerTransform::None) return out;
  for (double& v : out) {
    if (!(v > 0.0)) throw std::invalid_argument("negative inverse square root needs positive marker values");
    v = -1.0 / std::sqrt(v);
  }
  return out;
}

/// Everything needed to turn two samples into a conditional ROC model.
struct PipelineConfig {
  Variant variant = Variant::Robust;
  Family family = Family::Linear;
  bool intercept = true;
  MMConfig mm;
  // Hard rejection unless overridden. Smooth weights at eta = 2.5 already
  // shrink |r| ~ 1 and bias the residual law on clean data.
  std::optional<WeightKind> weight_kind;
  double eta = 2.5;

  WeightKind effective_weight_kind() const { return weight_kind.value_or(WeightKind::HardRejection); }
};

inline RegressionSpec spec_for(Family family, std::size_t dim, bool intercept) {
  switch (family) {
    case Family::Linear: return RegressionSpec::linear(dim, intercept);
    case Family::Exponential:
      if (dim != 1) throw std::invalid_argument("exponential family needs a scalar covariate");
      return RegressionSpec::exponential();
    case Family::Custom: break;
  }
  throw std::invalid_argument("custom families must be fitted directly");
}

/// Starting value for the exponential family: least squares of log(y) on x
/// over the positive responses.
inline Vector exponential_start(const PopulationSample& s) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s.y()[i] > 0.0)) continue;
    const double x = s.x(i)[0], ly = std::log(s.y()[i]);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
    m += 1;
  }
  Vector b(2);
  const double den = m * sxx - sx * sx;
  if (m < 2 || std::abs(den) < 1e-300) {
    b << 1.0, 0.0;
    return b;
  }
  const double slope = (m * sxy - sx * sy) / den;
  b << std::exp((sy - slope * sx) / m), slope;
  return b;
}

/// Step 1 for one population: MM for robust/hybrid, least squares for classical.
inline RobustFit fit_population(const PopulationSample& sample, const PipelineConfig& cfg,
                                const std::optional<Vector>& beta_init = std::nullopt) {
  if (cfg.family == Family::Linear) {
    if (cfg.variant == Variant::Classical)
      return fit_least_squares(sample, RegressionSpec::linear(sample.dim(), cfg.intercept));
    return fit_mm_linear(sample, cfg.intercept, cfg.mm);
  }
  const RegressionSpec spec = spec_for(cfg.family, sample.dim(), cfg.intercept);
  const Vector init = beta_init ? *beta_init : exponential_start(sample);
  if (cfg.variant == Variant::Classical) return fit_least_squares(sample, spec, init, cfg.mm.max_iter, cfg.mm.tol);
  return fit_mm_nonlinear(sample, spec, init, cfg.mm);
}

/// Step 2 for one population given its fit.
inline WeightedEcdf residual_distribution(const PopulationSample& sample, const RobustFit& fit, Variant variant,
                                          const PipelineConfig& cfg,
                                          const ReferenceDistribution& ref = ReferenceDistribution::standard_normal()) {
  if (fit.scale_degenerate || !(fit.sigma_hat > 0.0))
    throw NumericalError(std::string("degenerate residual scale for population ") + to_string(sample.label()));
  const ResidualSet r = standardized_residuals(sample, fit);
  if (variant == Variant::Robust)
    return build_weighted_ecdf(r, WeightFunction::of(cfg.effective_weight_kind()), ref, cfg.eta);
  return plain_ecdf(r);
}

inline ConditionalRocModel assemble_model(const PopulationSample& diseased, RobustFit fit_D,
                                          const PopulationSample& healthy, RobustFit fit_H, Variant variant,
                                          const PipelineConfig& cfg) {
  WeightedEcdf g_D = residual_distribution(diseased, fit_D, variant, cfg);
  WeightedEcdf g_H = residual_distribution(healthy, fit_H, variant, cfg);
  return ConditionalRocModel{std::move(fit_D), std::move(fit_H), std::move(g_D), std::move(g_H), variant};
}

inline ConditionalRocModel build_model(const PopulationSample& diseased, const PopulationSample& healthy,
                                       const PipelineConfig& cfg,
                                       const std::optional<Vector>& beta_init_D = std::nullopt,
                                       const std::optional<Vector>& beta_init_H = std::nullopt) {
  if (diseased.dim() != healthy.dim()) throw std::invalid_argument("populations have different covariate dimensions");
  PipelineConfig cfg_H = cfg;
  cfg_H.mm.seed = cfg.mm.seed + 1;
  RobustFit fit_D = fit_population(diseased, cfg, beta_init_D);
  RobustFit fit_H = fit_population(healthy, cfg_H, beta_init_H);
  return assemble_model(diseased, std::move(fit_D), healthy, std::move(fit_H), cfg.variant, cfg);
}

}  // namespace robroc

#endif  // ROBROC_ROC_ENGINE_HPP
