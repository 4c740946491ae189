#ifndef ROBROC_MODEL_CORE_HPP
#define ROBROC_MODEL_CORE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace robroc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when numerical work cannot produce a usable result (rank
/// deficiency, degenerate scale, empty weighted distribution).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Population { Diseased, Healthy };

inline const char* to_string(Population p) {
  return p == Population::Diseased ? "D" : "H";
}

/// Paired (y, x) observations for one population. Covariates are stored
/// row-major in a flat buffer with explicit dimension.
class PopulationSample {
public:
  PopulationSample(Population label, std::vector<double> y, std::vector<double> x_flat,
                   std::size_t dim = 1)
      : label_(label), y_(std::move(y)), x_(std::move(x_flat)), dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("covariate dimension must be >= 1");
    if (y_.empty()) throw std::invalid_argument("sample must contain at least one observation");
    if (x_.size() != y_.size() * dim_)
      throw std::invalid_argument("covariate buffer size does not match n * dim");
    for (double v : y_)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite marker value");
    for (double v : x_)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite covariate value");
  }

  Population label() const { return label_; }
  std::size_t size() const { return y_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& x_flat() const { return x_; }

  std::span<const double> x(std::size_t i) const {
    return std::span<const double>(x_).subspan(i * dim_, dim_);
  }

  /// Same covariates, new responses.
  PopulationSample with_y(std::vector<double> y) const {
    return PopulationSample(label_, std::move(y), x_, dim_);
  }

private:
  Population label_;
  std::vector<double> y_;
  std::vector<double> x_;
  std::size_t dim_;
};

enum class Family { Linear, Exponential, Custom };

/// A regression-function family f(x, beta).
struct RegressionSpec {
  using EvalFn = std::function<double(std::span<const double>, const Vector&)>;
  using GradFn = std::function<Vector(std::span<const double>, const Vector&)>;

  Family family = Family::Linear;
  std::size_t coef_dim = 0;
  std::size_t covariate_dim = 1;
  bool intercept = false;
  EvalFn eval;
  GradFn gradient;

  double operator()(std::span<const double> x, const Vector& beta) const { return eval(x, beta); }
  bool has_gradient() const { return static_cast<bool>(gradient); }
  bool is_linear() const { return family == Family::Linear; }

  /// Design row for the linear family: optional leading 1 followed by x.
  Vector design_row(std::span<const double> x) const {
    Vector row(coef_dim);
    std::size_t k = 0;
    if (intercept) row(k++) = 1.0;
    for (double v : x) row(k++) = v;
    return row;
  }

  static RegressionSpec linear(std::size_t covariate_dim, bool intercept = true) {
    RegressionSpec s;
    s.family = Family::Linear;
    s.covariate_dim = covariate_dim;
    s.intercept = intercept;
    s.coef_dim = covariate_dim + (intercept ? 1 : 0);
    s.eval = [intercept](std::span<const double> x, const Vector& b) {
      double v = 0.0;
      std::size_t k = 0;
      if (intercept) v += b(k++);
      for (double xi : x) v += b(k++) * xi;
      return v;
    };
    s.gradient = [intercept, q = s.coef_dim](std::span<const double> x, const Vector&) {
      Vector g(q);
      std::size_t k = 0;
      if (intercept) g(k++) = 1.0;
      for (double xi : x) g(k++) = xi;
      return g;
    };
    return s;
  }

  /// f(x, beta) = beta_1 * exp(beta_2 * x) for scalar x.
  static RegressionSpec exponential() {
    RegressionSpec s;
    s.family = Family::Exponential;
    s.covariate_dim = 1;
    s.coef_dim = 2;
    s.eval = [](std::span<const double> x, const Vector& b) { return b(0) * std::exp(b(1) * x[0]); };
    s.gradient = [](std::span<const double> x, const Vector& b) {
      const double e = std::exp(b(1) * x[0]);
      Vector g(2);
      g << e, b(0) * x[0] * e;
      return g;
    };
    return s;
  }

  static RegressionSpec custom(std::size_t covariate_dim, std::size_t coef_dim, EvalFn eval,
                               GradFn gradient = {}) {
    RegressionSpec s;
    s.family = Family::Custom;
    s.covariate_dim = covariate_dim;
    s.coef_dim = coef_dim;
    s.eval = std::move(eval);
    s.gradient = std::move(gradient);
    return s;
  }
};

enum class FitMethod { MMLinear, MMNonlinear, LeastSquares };

inline const char* to_string(FitMethod m) {
  switch (m) {
    case FitMethod::MMLinear: return "mm_linear";
    case FitMethod::MMNonlinear: return "mm_nonlinear";
    case FitMethod::LeastSquares: return "least_squares";
  }
  return "?";
}

struct RobustFit {
  RegressionSpec spec;
  Vector beta_hat;
  double sigma_hat = 0.0;
  FitMethod method = FitMethod::LeastSquares;
  bool converged = false;
  std::size_t iterations = 0;
  // sigma_hat == 0 because more than half of the residuals vanished.
  bool scale_degenerate = false;

  double mean_at(std::span<const double> x) const { return spec(x, beta_hat); }
  double mean_at(double x) const { return spec(std::span<const double>(&x, 1), beta_hat); }
};

struct ResidualSet {
  std::vector<double> r;
  const RobustFit* source_fit = nullptr;

  std::size_t size() const { return r.size(); }
};

/// r_i = (y_i - f(x_i, beta_hat)) / sigma_hat, in sample order.
inline ResidualSet standardized_residuals(const PopulationSample& sample, const RobustFit& fit) {
  if (fit.spec.covariate_dim != sample.dim())
    throw std::invalid_argument("fit covariate dimension does not match sample");
  if (static_cast<std::size_t>(fit.beta_hat.size()) != fit.spec.coef_dim)
    throw std::invalid_argument("coefficient vector has wrong length");
  if (!fit.beta_hat.allFinite() || !std::isfinite(fit.sigma_hat))
    throw NumericalError("non-finite fit parameters");
  if (!(fit.sigma_hat > 0.0)) throw NumericalError("residual scale must be positive");

  ResidualSet out;
  out.source_fit = &fit;
  out.r.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i)
    out.r.push_back((sample.y()[i] - fit.mean_at(sample.x(i))) / fit.sigma_hat);
  return out;
}

/// Evaluation net: probabilities in (0,1) and covariate values, both strictly increasing.
struct EvalGrid {
  std::vector<double> p_grid;
  std::vector<double> x_grid;

  EvalGrid() = default;
  EvalGrid(std::vector<double> p, std::vector<double> x) : p_grid(std::move(p)), x_grid(std::move(x)) {
    validate();
  }

  void validate() const {
    if (p_grid.empty() || x_grid.empty()) throw std::invalid_argument("grid must be nonempty");
    for (std::size_t j = 0; j < p_grid.size(); ++j) {
      if (!(p_grid[j] > 0.0 && p_grid[j] < 1.0))
        throw std::invalid_argument("p grid values must lie in (0,1)");
      if (j > 0 && !(p_grid[j] > p_grid[j - 1]))
        throw std::invalid_argument("p grid must be strictly increasing");
    }
    for (std::size_t i = 1; i < x_grid.size(); ++i)
      if (!(x_grid[i] > x_grid[i - 1])) throw std::invalid_argument("x grid must be strictly increasing");
  }

  bool operator==(const EvalGrid&) const = default;
};

/// Points lo, lo + step, ..., hi. Both endpoints are hit exactly.
inline std::vector<double> equidistant(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("invalid equidistant range");
  const auto intervals = static_cast<std::size_t>(std::llround((hi - lo) / step));
  if (intervals == 0) return {lo};
  std::vector<double> v(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k)
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(intervals);
  v.back() = hi;
  return v;
}

enum class ScenarioModel { Linear51, Nonlinear52 };

inline EvalGrid default_grids(ScenarioModel model) {
  auto p = equidistant(0.01, 0.99, 0.01);
  auto x = model == ScenarioModel::Linear51 ? equidistant(-1.0, 1.0, 0.05) : equidistant(0.0, 1.0, 0.05);
  return EvalGrid(std::move(p), std::move(x));
}

}  // namespace robroc

#endif  // ROBROC_MODEL_CORE_HPP
