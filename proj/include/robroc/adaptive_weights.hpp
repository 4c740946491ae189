#ifndef ROBROC_ADAPTIVE_WEIGHTS_HPP
#define ROBROC_ADAPTIVE_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "robroc/model_core.hpp"
#include "robroc/normal.hpp"

namespace robroc {

enum class WeightKind { HardRejection, SmoothPolynomial, Custom };

inline const char* to_string(WeightKind k) {
  switch (k) {
    case WeightKind::HardRejection: return "hard";
    case WeightKind::SmoothPolynomial: return "smooth";
    case WeightKind::Custom: return "custom";
  }
  return "?";
}

/// Even, non-increasing on [0, inf), w(0) = 1, w(u) = 0 for |u| >= 1.
struct WeightFunction {
  WeightKind kind = WeightKind::HardRejection;
  std::function<double(double)> eval;

  double operator()(double u) const { return eval(u); }

  static WeightFunction hard_rejection() {
    // open interval so that |r| == t_n is rejected as well
    return {WeightKind::HardRejection, [](double u) { return std::abs(u) < 1.0 ? 1.0 : 0.0; }};
  }

  static WeightFunction smooth_polynomial() {
    return {WeightKind::SmoothPolynomial, [](double u) {
              if (std::abs(u) >= 1.0) return 0.0;
              const double a = 1.0 - u * u;
              return a * a;
            }};
  }

  static WeightFunction custom(std::function<double(double)> fn) { return {WeightKind::Custom, std::move(fn)}; }

  static WeightFunction of(WeightKind k) {
    if (k == WeightKind::SmoothPolynomial) return smooth_polynomial();
    if (k == WeightKind::HardRejection) return hard_rejection();
    throw std::invalid_argument("custom weight functions must be built with WeightFunction::custom");
  }
};

/// Hypothetical error law G used to judge how heavy the residual tails are.
struct ReferenceDistribution {
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
  std::function<double(double)> abs_cdf;

  /// Symmetric law with the given cdf and quantile; G+(t) = 2G(t) - 1.
  static ReferenceDistribution symmetric(std::function<double(double)> cdf, std::function<double(double)> quantile) {
    ReferenceDistribution d;
    d.abs_cdf = [cdf](double t) { return t <= 0.0 ? 0.0 : 2.0 * cdf(t) - 1.0; };
    d.cdf = std::move(cdf);
    d.quantile = std::move(quantile);
    return d;
  }

  static ReferenceDistribution standard_normal() { return normal(1.0); }

  static ReferenceDistribution normal(double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("normal reference scale must be positive");
    return symmetric([scale](double t) { return normal::cdf(t / scale); },
                     [scale](double p) { return scale * normal::quantile(p); });
  }
};

/// G+_n(t) = #{|r_i| <= t} / n.
class AbsEcdf {
public:
  explicit AbsEcdf(std::span<const double> residuals) {
    if (residuals.empty()) throw std::invalid_argument("abs_ecdf needs at least one residual");
    abs_.reserve(residuals.size());
    for (double r : residuals) abs_.push_back(std::abs(r));
    std::sort(abs_.begin(), abs_.end());
  }

  double operator()(double t) const {
    const auto k = std::upper_bound(abs_.begin(), abs_.end(), t) - abs_.begin();
    return static_cast<double>(k) / static_cast<double>(abs_.size());
  }

  const std::vector<double>& order_statistics() const { return abs_; }

private:
  std::vector<double> abs_;
};

inline AbsEcdf abs_ecdf(const ResidualSet& residuals) { return AbsEcdf(residuals.r); }

/// d_n = max_i max(G+(|r|_(i)) - (i-1)/n, 0) over the absolute order statistics.
inline double atypicality_dn(std::span<const double> residuals, const ReferenceDistribution& ref) {
  const AbsEcdf g(residuals);
  const auto& a = g.order_statistics();
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, ref.abs_cdf(a[i]) - static_cast<double>(i) / n);
  return std::clamp(d, 0.0, 1.0);
}

inline double atypicality_dn(const ResidualSet& residuals, const ReferenceDistribution& ref) {
  return atypicality_dn(std::span<const double>(residuals.r), ref);
}

struct Cutoff {
  double t_bar_n = 0.0;
  double t_n = 0.0;
  double d_n = 0.0;
  std::size_t i_n = 0;
};

/// t_bar_n = |r|_(i_n) with i_n = n - floor(n d_n); t_n = max(t_bar_n, eta).
inline Cutoff adaptive_cutoff(std::span<const double> residuals, const ReferenceDistribution& ref, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  const AbsEcdf g(residuals);
  const auto& a = g.order_statistics();
  const std::size_t n = a.size();

  Cutoff c;
  c.d_n = atypicality_dn(residuals, ref);
  const auto dropped = static_cast<std::size_t>(std::floor(static_cast<double>(n) * c.d_n));
  c.i_n = n - std::min(dropped, n);
  c.t_bar_n = c.i_n == 0 ? 0.0 : a[c.i_n - 1];
  c.t_n = std::max(c.t_bar_n, eta);
  return c;
}

inline Cutoff adaptive_cutoff(const ResidualSet& residuals, const ReferenceDistribution& ref, double eta) {
  return adaptive_cutoff(std::span<const double>(residuals.r), ref, eta);
}

/// Weighted step distribution of residuals, with its generalized inverse.
/// Immutable once built.
class WeightedEcdf {
public:
  WeightedEcdf(std::span<const double> residuals, std::vector<double> weights, Cutoff cutoff, double eta)
      : weights_(std::move(weights)), cutoff_(cutoff), eta_(eta) {
    if (residuals.empty()) throw std::invalid_argument("weighted ECDF needs at least one residual");
    if (weights_.size() != residuals.size()) throw std::invalid_argument("one weight per residual required");
    for (double w : weights_)
      if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("weights must lie in [0,1]");

    order_.resize(residuals.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t i, std::size_t j) { return residuals[i] < residuals[j]; });
    sorted_.reserve(order_.size());
    cum_.reserve(order_.size());
    double acc = 0.0;
    for (std::size_t k : order_) {
      sorted_.push_back(residuals[k]);
      acc += weights_[k];
      cum_.push_back(acc);
    }
    weight_sum_ = acc;
    if (!(weight_sum_ > 0.0))
      throw NumericalError("all residuals lie at or beyond the cut-off; weighted ECDF is empty");
  }

  /// Sum of w_i 1{r_i <= t} / sum of w_i.
  double cdf(double t) const {
    const auto k = std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin();
    if (k == 0) return 0.0;
    return cum_[static_cast<std::size_t>(k - 1)] / weight_sum_;
  }

  /// Smallest support point t with cdf(t) >= q.
  double quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    const auto it = std::partition_point(cum_.begin(), cum_.end(), [&](double c) { return c / weight_sum_ < q; });
    const auto k = it == cum_.end() ? cum_.size() - 1 : static_cast<std::size_t>(it - cum_.begin());
    return sorted_[k];
  }

  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted_residuals() const { return sorted_; }
  /// Index into the original residual order for each sorted position.
  const std::vector<std::size_t>& order() const { return order_; }
  /// Weights in the original residual order.
  const std::vector<double>& weights() const { return weights_; }
  double weight_sum() const { return weight_sum_; }
  double t_n() const { return cutoff_.t_n; }
  double t_bar_n() const { return cutoff_.t_bar_n; }
  double d_n() const { return cutoff_.d_n; }
  double eta() const { return eta_; }
  const Cutoff& cutoff() const { return cutoff_; }

  /// Original indices with zero weight.
  std::vector<std::size_t> rejected() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (weights_[i] == 0.0) out.push_back(i);
    return out;
  }

private:
  std::vector<double> sorted_;
  std::vector<std::size_t> order_;
  std::vector<double> weights_;
  std::vector<double> cum_;
  double weight_sum_ = 0.0;
  Cutoff cutoff_;
  double eta_;
};

/// Weights w(r_i / t_n) at a given cut-off.
inline WeightedEcdf build_weighted_ecdf_at(std::span<const double> residuals, const WeightFunction& w, Cutoff cutoff,
                                           double eta) {
  if (!(cutoff.t_n > 0.0)) throw std::invalid_argument("cut-off must be positive");
  std::vector<double> weights;
  weights.reserve(residuals.size());
  for (double r : residuals) weights.push_back(std::clamp(w(r / cutoff.t_n), 0.0, 1.0));
  return WeightedEcdf(residuals, std::move(weights), cutoff, eta);
}

inline WeightedEcdf build_weighted_ecdf(std::span<const double> residuals, const WeightFunction& w,
                                        const ReferenceDistribution& ref, double eta) {
  return build_weighted_ecdf_at(residuals, w, adaptive_cutoff(residuals, ref, eta), eta);
}

inline WeightedEcdf build_weighted_ecdf(const ResidualSet& residuals, const WeightFunction& w,
                                        const ReferenceDistribution& ref, double eta) {
  return build_weighted_ecdf(std::span<const double>(residuals.r), w, ref, eta);
}

/// Classical empirical distribution: every residual has weight 1.
inline WeightedEcdf plain_ecdf(std::span<const double> residuals) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return WeightedEcdf(residuals, std::vector<double>(residuals.size(), 1.0), Cutoff{inf, inf, 0.0, residuals.size()},
                      inf);
}

inline WeightedEcdf plain_ecdf(const ResidualSet& residuals) { return plain_ecdf(std::span<const double>(residuals.r)); }

inline double weighted_quantile(const WeightedEcdf& ecdf, double q) { return ecdf.quantile(q); }

}  // namespace robroc

#endif  // ROBROC_ADAPTIVE_WEIGHTS_HPP
