#ifndef ROBROC_ROBUST_REGRESSION_HPP
#define ROBROC_ROBUST_REGRESSION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "robroc/model_core.hpp"

namespace robroc {

/// Tuning of the S- and M-stages. Defaults give a 50% breakdown S-scale
/// consistent at the normal and a 95% efficient bisquare M-step.
struct MMConfig {
  double rho_s_tuning = 1.54764;
  double rho_m_tuning = 4.685;
  double breakdown_b = 0.5;
  std::size_t n_subsamples = 500;
  std::size_t max_iter = 100;
  double tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("MMConfig.tol must be positive");
    if (n_subsamples < 1) throw std::invalid_argument("MMConfig.n_subsamples must be >= 1");
    if (!(breakdown_b > 0.0 && breakdown_b <= 0.5))
      throw std::invalid_argument("MMConfig.breakdown_b must lie in (0, 0.5]");
    if (!(rho_s_tuning > 0.0) || !(rho_m_tuning > 0.0))
      throw std::invalid_argument("bisquare tuning constants must be positive");
    if (max_iter < 1) throw std::invalid_argument("MMConfig.max_iter must be >= 1");
  }
};

/// Tukey bisquare, rho normalised so that rho(inf) = 1.
namespace bisquare {

inline double rho(double u, double c) {
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 1.0;
  const double a = 1.0 - t * t;
  return 1.0 - a * a * a;
}

/// psi(u)/u up to a constant factor.
inline double weight(double u, double c) {
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 0.0;
  const double a = 1.0 - t * t;
  return a * a;
}

}  // namespace bisquare

struct MScale {
  double scale = 0.0;
  // No positive root: too many exactly-zero residuals.
  bool degenerate = false;
};

/// Solves mean(rho(r_i / s)) = b for s. The left side is non-increasing in
/// s and tends to the fraction of nonzero residuals as s -> 0, so a positive
/// root exists iff that fraction exceeds b.
inline MScale m_scale(std::span<const double> residuals, double c, double b) {
  if (residuals.empty()) throw std::invalid_argument("m_scale needs at least one residual");
  const double n = static_cast<double>(residuals.size());

  std::vector<double> abs_r;
  abs_r.reserve(residuals.size());
  std::size_t nonzero = 0;
  for (double r : residuals) {
    abs_r.push_back(std::abs(r));
    if (r != 0.0) ++nonzero;
  }
  if (static_cast<double>(nonzero) / n <= b) return {0.0, true};

  auto excess = [&](double s) {
    double sum = 0.0;
    for (double a : abs_r) sum += bisquare::rho(a / s, c);
    return sum / n - b;
  };

  std::vector<double> tmp = abs_r;
  auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  double s0 = *mid / 0.6745;
  if (!(s0 > 0.0)) s0 = *std::max_element(abs_r.begin(), abs_r.end());

  double lo = s0, hi = s0;
  double f_lo = excess(lo), f_hi = f_lo;
  while (f_lo <= 0.0) {
    lo *= 0.5;
    f_lo = excess(lo);
  }
  while (f_hi > 0.0) {
    hi *= 2.0;
    f_hi = excess(hi);
  }
  if (f_hi == 0.0) return {hi, false};

  boost::uintmax_t max_iter = 200;
  auto tol = [](double a, double z) { return std::abs(a - z) <= 1e-15 * std::max(std::abs(a), std::abs(z)); };
  auto [a, z] = boost::math::tools::toms748_solve(excess, lo, hi, f_lo, f_hi, tol, max_iter);
  return {0.5 * (a + z), false};
}

inline MScale m_scale(std::span<const double> residuals, const MMConfig& cfg) {
  return m_scale(residuals, cfg.rho_s_tuning, cfg.breakdown_b);
}

namespace detail {

/// Residuals with |r| below this are treated as exactly zero so that
/// interpolating fits are recognised despite rounding.
inline double zero_threshold(const std::vector<double>& y) {
  double m = 1.0;
  for (double v : y) m = std::max(m, std::abs(v));
  return 1e-10 * m;
}

inline void snap_zeros(Vector& r, double thr) {
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (std::abs(r(i)) <= thr) r(i) = 0.0;
}

inline MScale scale_of(const Vector& r, double c, double b) {
  return m_scale(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), c, b);
}

inline Matrix design_matrix(const PopulationSample& sample, const RegressionSpec& spec) {
  Matrix X(static_cast<Eigen::Index>(sample.size()), static_cast<Eigen::Index>(spec.coef_dim));
  for (std::size_t i = 0; i < sample.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = spec.design_row(sample.x(i));
  return X;
}

inline Vector as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Weighted least squares; nullopt when the weighted design is rank deficient.
inline std::optional<Vector> solve_wls(const Matrix& X, const Vector& y, const Vector& w) {
  const Vector sw = w.cwiseSqrt();
  Eigen::ColPivHouseholderQR<Matrix> qr(sw.asDiagonal() * X);
  if (qr.rank() < X.cols()) return std::nullopt;
  return Vector(qr.solve(sw.cwiseProduct(y)));
}

struct NonlinearProblem {
  const PopulationSample& sample;
  const RegressionSpec& spec;
  Vector y;

  NonlinearProblem(const PopulationSample& s, const RegressionSpec& f) : sample(s), spec(f), y(as_vector(s.y())) {}

  Vector residuals(const Vector& beta) const {
    Vector r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
      r(i) = y(i) - spec(sample.x(static_cast<std::size_t>(i)), beta);
    return r;
  }

  Matrix jacobian(const Vector& beta) const {
    Matrix J(y.size(), static_cast<Eigen::Index>(spec.coef_dim));
    for (Eigen::Index i = 0; i < y.size(); ++i)
      J.row(i) = spec.gradient(sample.x(static_cast<std::size_t>(i)), beta).transpose();
    return J;
  }
};

/// Weighted Gauss-Newton direction. Singular normal equations fall back to
/// the minimum-norm solution.
inline Vector gauss_newton_step(const Matrix& J, const Vector& r, const Vector& w) {
  const Vector sw = w.cwiseSqrt();
  const Matrix A = sw.asDiagonal() * J;
  const Vector rhs = sw.cwiseProduct(r);
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  if (qr.rank() == A.cols()) return qr.solve(rhs);
  return A.completeOrthogonalDecomposition().solve(rhs);
}

}  // namespace detail

/// Linear MM-estimator: subsampled S-estimator for the initial fit and
/// scale, then a bisquare M-step at fixed scale.
inline RobustFit fit_mm_linear(const PopulationSample& sample, bool intercept, const MMConfig& cfg) {
  cfg.validate();
  RegressionSpec spec = RegressionSpec::linear(sample.dim(), intercept);
  const auto n = static_cast<Eigen::Index>(sample.size());
  const auto q = static_cast<Eigen::Index>(spec.coef_dim);
  if (n <= q) throw std::invalid_argument("MM fit needs more observations than coefficients");

  const Matrix X = detail::design_matrix(sample, spec);
  const Vector y = detail::as_vector(sample.y());
  if (Eigen::ColPivHouseholderQR<Matrix>(X).rank() < q) throw NumericalError("design matrix is rank deficient");
  const double thr = detail::zero_threshold(sample.y());
  const double cs = cfg.rho_s_tuning, b = cfg.breakdown_b;

  RobustFit fit;
  fit.spec = spec;
  fit.method = FitMethod::MMLinear;

  auto residuals = [&](const Vector& beta) {
    Vector r = y - X * beta;
    detail::snap_zeros(r, thr);
    return r;
  };

  // One reweighting step of the S-estimator; returns false on a singular solve.
  auto s_step = [&](Vector& beta, MScale& sc) {
    const Vector r = residuals(beta);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = bisquare::weight(r(i) / sc.scale, cs);
    auto next = detail::solve_wls(X, y, w);
    if (!next) return false;
    const MScale next_sc = detail::scale_of(residuals(*next), cs, b);
    if (!next_sc.degenerate && next_sc.scale > sc.scale) return false;
    beta = *next;
    sc = next_sc;
    return true;
  };

  struct Candidate {
    Vector beta;
    MScale sc;
  };
  std::vector<Candidate> best;
  constexpr std::size_t keep = 5;
  std::optional<Candidate> exact;

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Matrix Xs(q, q);
  Vector ys(q);
  for (std::size_t k = 0; k < cfg.n_subsamples && !exact; ++k) {
    // partial Fisher-Yates for q distinct rows
    for (Eigen::Index j = 0; j < q; ++j) {
      std::uniform_int_distribution<Eigen::Index> pick(j, n - 1);
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick(rng))]);
      Xs.row(j) = X.row(idx[static_cast<std::size_t>(j)]);
      ys(j) = y(idx[static_cast<std::size_t>(j)]);
    }
    Eigen::FullPivLU<Matrix> lu(Xs);
    if (lu.rank() < q) continue;
    Candidate c{lu.solve(ys), {}};
    c.sc = detail::scale_of(residuals(c.beta), cs, b);
    if (c.sc.degenerate) {
      exact = c;
      break;
    }
    for (int step = 0; step < 2 && !c.sc.degenerate; ++step)
      if (!s_step(c.beta, c.sc)) break;
    if (c.sc.degenerate) {
      exact = c;
      break;
    }
    auto pos = std::find_if(best.begin(), best.end(), [&](const Candidate& o) { return c.sc.scale < o.sc.scale; });
    if (best.size() < keep || pos != best.end()) {
      best.insert(pos, std::move(c));
      if (best.size() > keep) best.pop_back();
    }
  }

  if (exact) {
    fit.beta_hat = exact->beta;
    fit.sigma_hat = 0.0;
    fit.scale_degenerate = true;
    fit.converged = true;
    return fit;
  }
  if (best.empty()) throw NumericalError("no nonsingular elemental subset found");

  std::size_t s_iters = 0;
  for (auto& c : best) {
    for (std::size_t it = 0; it < cfg.max_iter && !c.sc.degenerate; ++it) {
      const Vector before = c.beta;
      const double prev = c.sc.scale;
      ++s_iters;
      if (!s_step(c.beta, c.sc)) break;
      if ((c.beta - before).cwiseAbs().maxCoeff() < cfg.tol || prev - c.sc.scale <= 1e-12 * prev) break;
    }
  }
  auto s_best = std::min_element(best.begin(), best.end(), [](const Candidate& a, const Candidate& o) {
    if (a.sc.degenerate != o.sc.degenerate) return a.sc.degenerate;
    return a.sc.scale < o.sc.scale;
  });
  if (s_best->sc.degenerate) {
    fit.beta_hat = s_best->beta;
    fit.scale_degenerate = true;
    fit.converged = true;
    fit.iterations = s_iters;
    return fit;
  }

  const double sigma = s_best->sc.scale;
  Vector beta = s_best->beta;
  const double cm = cfg.rho_m_tuning;
  bool converged = false;
  std::size_t it = 0;
  for (; it < cfg.max_iter; ++it) {
    const Vector r = (y - X * beta) / sigma;
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = bisquare::weight(r(i), cm);
    auto next = detail::solve_wls(X, y, w);
    if (!next) break;
    const double change = (*next - beta).cwiseAbs().maxCoeff();
    beta = *next;
    if (change < cfg.tol) {
      converged = true;
      ++it;
      break;
    }
  }
  fit.beta_hat = beta;
  fit.sigma_hat = sigma;
  fit.converged = converged;
  fit.iterations = it;
  return fit;
}

/// Nonlinear MM-estimator: the S-stage minimises the M-scale of the
/// residuals by reweighted Gauss-Newton from beta_init and random restarts
/// around it; the M-stage minimises sum rho_M(r_i / sigma) at fixed sigma.
inline RobustFit fit_mm_nonlinear(const PopulationSample& sample, const RegressionSpec& spec, const Vector& beta_init,
                                  const MMConfig& cfg) {
  cfg.validate();
  if (!spec.has_gradient()) throw std::invalid_argument("nonlinear MM fit requires a gradient");
  if (static_cast<std::size_t>(beta_init.size()) != spec.coef_dim || !beta_init.allFinite())
    throw std::invalid_argument("beta_init must be finite with coef_dim entries");
  if (spec.covariate_dim != sample.dim()) throw std::invalid_argument("covariate dimension mismatch");
  if (sample.size() <= spec.coef_dim) throw std::invalid_argument("MM fit needs more observations than coefficients");

  const detail::NonlinearProblem prob(sample, spec);
  const auto n = static_cast<Eigen::Index>(sample.size());
  const double thr = detail::zero_threshold(sample.y());
  const double cs = cfg.rho_s_tuning, b = cfg.breakdown_b, cm = cfg.rho_m_tuning;

  auto residuals = [&](const Vector& beta) {
    Vector r = prob.residuals(beta);
    detail::snap_zeros(r, thr);
    return r;
  };
  auto scale_at = [&](const Vector& beta) -> MScale {
    const Vector r = residuals(beta);
    if (!r.allFinite()) return {std::numeric_limits<double>::infinity(), false};
    return detail::scale_of(r, cs, b);
  };

  RobustFit fit;
  fit.spec = spec;
  fit.method = FitMethod::MMNonlinear;

  // Screen restarts by their M-scale; keep a few for full refinement.
  struct Start {
    Vector beta;
    MScale sc;
  };
  std::vector<Start> starts{{beta_init, scale_at(beta_init)}};
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<Start> screened;
  for (std::size_t k = 0; k < cfg.n_subsamples; ++k) {
    Vector beta = beta_init;
    for (Eigen::Index j = 0; j < beta.size(); ++j) beta(j) += 0.5 * (std::abs(beta_init(j)) + 0.1) * unif(rng);
    screened.push_back({beta, scale_at(beta)});
  }
  constexpr std::size_t keep = 3;
  const auto cut = std::min(keep, screened.size());
  std::partial_sort(screened.begin(), screened.begin() + static_cast<std::ptrdiff_t>(cut), screened.end(),
                    [](const Start& a, const Start& o) { return a.sc.scale < o.sc.scale; });
  for (std::size_t k = 0; k < cut; ++k) starts.push_back(screened[k]);

  std::size_t iters = 0;
  Start s_best{beta_init, {std::numeric_limits<double>::infinity(), false}};
  for (auto& st : starts) {
    if (st.sc.degenerate) {
      s_best = st;
      break;
    }
    if (!std::isfinite(st.sc.scale)) continue;
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
      ++iters;
      const Vector r = residuals(st.beta);
      Vector w(n);
      for (Eigen::Index i = 0; i < n; ++i) w(i) = bisquare::weight(r(i) / st.sc.scale, cs);
      Vector step = detail::gauss_newton_step(prob.jacobian(st.beta), r, w);
      bool accepted = false;
      for (int half = 0; half < 30; ++half) {
        const Vector cand = st.beta + step;
        const MScale sc = scale_at(cand);
        if (sc.degenerate || (std::isfinite(sc.scale) && sc.scale <= st.sc.scale)) {
          st.beta = cand;
          st.sc = sc;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (st.sc.degenerate || !accepted || step.cwiseAbs().maxCoeff() < cfg.tol) break;
    }
    if (st.sc.degenerate || st.sc.scale < s_best.sc.scale) s_best = st;
    if (st.sc.degenerate) break;
  }
  if (!std::isfinite(s_best.sc.scale) && !s_best.sc.degenerate)
    throw NumericalError("S-stage produced no finite scale");

  if (s_best.sc.degenerate) {
    fit.beta_hat = s_best.beta;
    fit.scale_degenerate = true;
    fit.converged = true;
    fit.iterations = iters;
    return fit;
  }

  const double sigma = s_best.sc.scale;
  auto objective = [&](const Vector& beta) {
    const Vector r = prob.residuals(beta);
    if (!r.allFinite()) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += bisquare::rho(r(i) / sigma, cm);
    return sum;
  };
  Vector beta = s_best.beta;
  double obj = objective(beta);
  bool converged = false;
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    ++iters;
    const Vector r = prob.residuals(beta);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = bisquare::weight(r(i) / sigma, cm);
    Vector step = detail::gauss_newton_step(prob.jacobian(beta), r, w);
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      const Vector cand = beta + step;
      const double o = objective(cand);
      if (o <= obj) {
        beta = cand;
        obj = o;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || step.cwiseAbs().maxCoeff() < cfg.tol) {
      // no descent left or the step vanished: stationary point
      converged = true;
      break;
    }
  }
  fit.beta_hat = beta;
  fit.sigma_hat = sigma;
  fit.converged = converged;
  fit.iterations = iters;
  return fit;
}

/// Classical fit: closed-form OLS for the linear family, Gauss-Newton
/// otherwise. sigma_hat uses the (n - q) denominator; 0 when n == q.
inline RobustFit fit_least_squares(const PopulationSample& sample, const RegressionSpec& spec,
                                   const std::optional<Vector>& beta_init = std::nullopt, std::size_t max_iter = 100,
                                   double tol = 1e-8) {
  if (spec.covariate_dim != sample.dim()) throw std::invalid_argument("covariate dimension mismatch");
  const auto n = static_cast<Eigen::Index>(sample.size());
  const auto q = static_cast<Eigen::Index>(spec.coef_dim);
  if (n < q) throw std::invalid_argument("least squares needs at least coef_dim observations");
  const double thr = detail::zero_threshold(sample.y());
  const Vector y = detail::as_vector(sample.y());

  RobustFit fit;
  fit.spec = spec;
  fit.method = FitMethod::LeastSquares;
  Vector r;

  if (spec.is_linear()) {
    const Matrix X = detail::design_matrix(sample, spec);
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < q) throw NumericalError("design matrix is rank deficient");
    fit.beta_hat = qr.solve(y);
    fit.converged = true;
    fit.iterations = 1;
    r = y - X * fit.beta_hat;
  } else {
    if (!spec.has_gradient()) throw std::invalid_argument("nonlinear least squares requires a gradient");
    if (!beta_init || static_cast<std::size_t>(beta_init->size()) != spec.coef_dim || !beta_init->allFinite())
      throw std::invalid_argument("nonlinear least squares requires a finite beta_init");
    const detail::NonlinearProblem prob(sample, spec);
    auto sse = [&](const Vector& beta) {
      const Vector res = prob.residuals(beta);
      return res.allFinite() ? res.squaredNorm() : std::numeric_limits<double>::infinity();
    };
    Vector beta = *beta_init;
    double obj = sse(beta);
    const Vector ones = Vector::Ones(n);
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
      const Vector res = prob.residuals(beta);
      Vector step = detail::gauss_newton_step(prob.jacobian(beta), res, ones);
      bool accepted = false;
      for (int half = 0; half < 30; ++half) {
        const Vector cand = beta + step;
        const double o = sse(cand);
        if (o <= obj) {
          beta = cand;
          obj = o;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted || step.cwiseAbs().maxCoeff() < tol) {
        fit.converged = true;
        ++it;
        break;
      }
    }
    fit.beta_hat = beta;
    fit.iterations = it;
    r = prob.residuals(beta);
  }

  detail::snap_zeros(r, thr);
  fit.sigma_hat = n > q ? std::sqrt(r.squaredNorm() / static_cast<double>(n - q)) : 0.0;
  fit.scale_degenerate = fit.sigma_hat == 0.0;
  return fit;
}

}  // namespace robroc

#endif  // ROBROC_ROBUST_REGRESSION_HPP
