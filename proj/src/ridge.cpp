#include "sevridge/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "sevridge/cohort.hpp"
#include "sevridge/error.hpp"

namespace sevridge {

void RidgeConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw ValidationError(std::string(name) + " must be a finite value > 0");
    }
  };
  positive(alpha_1, "alpha_1");
  positive(alpha_2, "alpha_2");
  positive(lambda_1, "lambda_1");
  positive(lambda_2, "lambda_2");
  if (alpha_init) positive(*alpha_init, "alpha_init");
  if (lambda_init) positive(*lambda_init, "lambda_init");
  positive(tol, "tol");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
}

namespace {

void check_finite(const Matrix& X, const Vector& y) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw ValidationError("design matrix must have at least one row and column");
  }
  if (y.size() != X.rows()) {
    throw ValidationError("target length " + std::to_string(y.size()) +
                          " does not match " + std::to_string(X.rows()) +
                          " design rows");
  }
  if (!X.allFinite()) throw ValidationError("design matrix has non-finite values");
  if (!y.allFinite()) throw ValidationError("target vector has non-finite values");
}

// Lower Cholesky factor of a symmetric positive-definite matrix. Hand-rolled
// so a breakdown can report the pivot that failed.
Matrix cholesky_lower(const Matrix& A) {
  const Eigen::Index p = A.rows();
  Matrix L = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = A(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0) || !std::isfinite(d)) {
      throw SingularityError(static_cast<std::size_t>(j), d);
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = A(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / ljj;
    }
  }
  return L;
}

Posterior posterior_from_gram(const Matrix& gram, const Vector& xty,
                              double alpha, double lambda) {
  const Eigen::Index p = gram.rows();
  Matrix precision = alpha * gram;
  precision.diagonal().array() += lambda;

  const Matrix L = cholesky_lower(precision);
  const auto lower = L.triangularView<Eigen::Lower>();

  Posterior post;
  const Matrix l_inv = lower.solve(Matrix::Identity(p, p));
  post.covariance = l_inv.transpose() * l_inv;
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();

  Vector rhs = alpha * xty;
  lower.solveInPlace(rhs);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
  post.mean = std::move(rhs);

  post.log_det_precision = 2.0 * L.diagonal().array().log().sum();
  return post;
}

double log_evidence(const RidgeConfig& cfg, double alpha, double lambda,
                    Eigen::Index n, Eigen::Index p, double sq_residual,
                    double sq_coef, double log_det_precision) {
  const auto nd = static_cast<double>(n);
  const auto pd = static_cast<double>(p);
  const double data_term =
      0.5 * (pd * std::log(lambda) + nd * std::log(alpha) -
             alpha * sq_residual - lambda * sq_coef - log_det_precision -
             nd * std::log(2.0 * std::numbers::pi));
  return data_term + (cfg.alpha_1 * std::log(alpha) - cfg.alpha_2 * alpha) +
         (cfg.lambda_1 * std::log(lambda) - cfg.lambda_2 * lambda);
}

}  // namespace

Posterior solve_posterior(const Matrix& X, const Vector& y, double alpha,
                          double lambda) {
  check_finite(X, y);
  if (!(alpha > 0) || !(lambda > 0) || !std::isfinite(alpha) ||
      !std::isfinite(lambda)) {
    throw ValidationError("alpha and lambda must be finite and > 0");
  }
  const Matrix gram = X.transpose() * X;
  const Vector xty = X.transpose() * y;
  return posterior_from_gram(gram, xty, alpha, lambda);
}

Standardization standardize(const Matrix& X, const Vector& y,
                            bool fit_intercept) {
  check_finite(X, y);
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();

  Standardization s;
  s.x_offset = fit_intercept ? Vector(X.colwise().mean().transpose())
                             : Vector::Zero(p);
  s.y_offset = fit_intercept ? y.mean() : 0.0;
  s.X = X.rowwise() - s.x_offset.transpose();
  s.y = y.array() - s.y_offset;
  s.x_scale = Vector::Ones(p);

  for (Eigen::Index j = 0; j < p; ++j) {
    auto col = s.X.col(j);
    const bool constant = (X.col(j).array() == X(0, j)).all();
    if (constant && fit_intercept) {
      col.setZero();
      continue;
    }
    const double rms = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    if (!std::isfinite(rms)) {
      throw ValidationError("column " + std::to_string(j) +
                            " overflows during scaling");
    }
    if (rms > 0) {
      s.x_scale(j) = rms;
      col /= rms;
    }
  }
  return s;
}

RidgeModel fit(const Matrix& X, const Vector& y, const RidgeConfig& config) {
  config.validate();
  const Standardization s = standardize(X, y, config.fit_intercept);
  const Eigen::Index n = s.X.rows();
  const Eigen::Index p = s.X.cols();

  const Matrix gram = s.X.transpose() * s.X;
  const Vector xty = s.X.transpose() * s.y;

  // Both precisions default to 1/Var(y). Starting lambda at 1 while y is of
  // order 1e20 traps the iteration in the prior-dominated fixed point
  // (coefficients ~ 0, lambda -> lambda_1 / lambda_2).
  const double var = (s.y.array() - s.y.mean()).square().mean();
  const double inv_var = var > 0 ? 1.0 / var : 1.0;
  double alpha = config.alpha_init.value_or(inv_var);
  double lambda = config.lambda_init.value_or(inv_var);

  RidgeModel model;
  model.config = config;

  Posterior post;
  Vector previous_mean;
  double gamma = static_cast<double>(p);
  bool converged = false;
  int iterations = 0;
  const int max_iter = config.update_hyperparams ? config.max_iter : 1;
  for (int iter = 0; iter < max_iter; ++iter) {
    post = posterior_from_gram(gram, xty, alpha, lambda);
    const double sq_residual = (s.y - s.X * post.mean).squaredNorm();
    const double sq_coef = post.mean.squaredNorm();
    model.log_evidence_trace.push_back(log_evidence(
        config, alpha, lambda, n, p, sq_residual, sq_coef,
        post.log_det_precision));
    iterations = iter + 1;

    gamma = static_cast<double>(p) - lambda * post.covariance.trace();
    gamma = std::clamp(gamma, 0.0, static_cast<double>(p));
    model.dof_trace.push_back(gamma);
    if (!config.update_hyperparams) {
      converged = true;
      break;
    }

    lambda = (gamma + 2.0 * config.lambda_1) / (sq_coef + 2.0 * config.lambda_2);
    alpha = (static_cast<double>(n) - gamma + 2.0 * config.alpha_1) /
            (sq_residual + 2.0 * config.alpha_2);

    if (iter > 0 && (post.mean - previous_mean).lpNorm<1>() < config.tol) {
      converged = true;
      break;
    }
    previous_mean = post.mean;
  }

  if (config.update_hyperparams) {
    post = posterior_from_gram(gram, xty, alpha, lambda);
    gamma = std::clamp(static_cast<double>(p) - lambda * post.covariance.trace(),
                       0.0, static_cast<double>(p));
  }

  model.coefficients = post.mean.cwiseQuotient(s.x_scale);
  const Vector inv_scale = s.x_scale.cwiseInverse();
  model.posterior_covariance =
      inv_scale.asDiagonal() * post.covariance * inv_scale.asDiagonal();
  model.x_offset = s.x_offset;
  model.intercept =
      config.fit_intercept ? s.y_offset - s.x_offset.dot(model.coefficients)
                           : 0.0;
  model.alpha = alpha;
  model.lambda = lambda;
  model.effective_dof = gamma;
  model.n_iter = iterations;
  model.converged = converged;
  return model;
}

namespace {

void check_columns(const RidgeModel& model, const Matrix& X) {
  if (X.cols() != model.n_features()) {
    throw ValidationError("expected " + std::to_string(model.n_features()) +
                          " feature columns, got " + std::to_string(X.cols()));
  }
}

}  // namespace

Vector predict(const RidgeModel& model, const Matrix& X) {
  check_columns(model, X);
  return (X * model.coefficients).array() + model.intercept;
}

PredictionWithStd predict_with_std(const RidgeModel& model, const Matrix& X) {
  check_columns(model, X);
  PredictionWithStd out;
  out.mean = predict(model, X);
  const Matrix d = X.rowwise() - model.x_offset.transpose();
  const Vector quad = ((d * model.posterior_covariance).array() * d.array())
                          .rowwise()
                          .sum();
  out.std = (quad.array().max(0.0) + 1.0 / model.alpha).sqrt();
  return out;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw ValidationError("design matrix must have at least one row and column");
  }
  const std::size_t p = rows.front().size();
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) {
      throw ValidationError("ragged design: row " + std::to_string(i) + " has " +
                            std::to_string(rows[i].size()) + " columns, expected " +
                            std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return X;
}

AgeBuckets AgeBuckets::standard() { return AgeBuckets{{6, 12, 18}}; }
AgeBuckets AgeBuckets::single() { return AgeBuckets{{}}; }

void AgeBuckets::validate() const {
  int previous = 0;
  for (int c : cutoffs) {
    if (c <= previous || c > kMaxAgeMonths) {
      throw ValidationError(
          "age bucket cutoffs must be strictly ascending within 1..24");
    }
    previous = c;
  }
}

std::size_t AgeBuckets::bucket_of(int age_months) const {
  if (age_months < 0 || age_months > kMaxAgeMonths) {
    throw RangeError("age_months must be in 0..24, got " +
                     std::to_string(age_months));
  }
  return static_cast<std::size_t>(
      std::upper_bound(cutoffs.begin(), cutoffs.end(), age_months) -
      cutoffs.begin());
}

int AgeBuckets::lower(std::size_t bucket) const {
  return bucket == 0 ? 0 : cutoffs.at(bucket - 1);
}

int AgeBuckets::upper(std::size_t bucket) const {
  return bucket == cutoffs.size() ? kMaxAgeMonths : cutoffs.at(bucket) - 1;
}

std::string AgeBuckets::label(std::size_t bucket) const {
  return std::to_string(lower(bucket)) + "-" + std::to_string(upper(bucket));
}

StratifiedModel fit_stratified(const Matrix& X, const Vector& y,
                               std::span<const int> ages,
                               const RidgeConfig& config,
                               const AgeBuckets& buckets) {
  buckets.validate();
  if (ages.size() != static_cast<std::size_t>(X.rows())) {
    throw ValidationError("ages length does not match design rows");
  }
  std::vector<std::vector<Eigen::Index>> rows(buckets.size());
  for (std::size_t i = 0; i < ages.size(); ++i) {
    rows[buckets.bucket_of(ages[i])].push_back(static_cast<Eigen::Index>(i));
  }
  std::string empty;
  for (std::size_t b = 0; b < rows.size(); ++b) {
    if (rows[b].empty()) empty += (empty.empty() ? "" : ", ") + buckets.label(b);
  }
  if (!empty.empty()) {
    throw ValidationError("empty age bucket(s): " + empty);
  }

  StratifiedModel out;
  out.buckets = buckets;
  for (const auto& idx : rows) {
    out.models.push_back(fit(X(idx, Eigen::all), y(idx), config));
  }
  return out;
}

Vector StratifiedModel::predict(const Matrix& X, std::span<const int> ages) const {
  if (ages.size() != static_cast<std::size_t>(X.rows())) {
    throw ValidationError("ages length does not match design rows");
  }
  if (models.size() != buckets.size()) {
    throw ValidationError("stratified model needs one model per bucket");
  }
  std::vector<std::vector<Eigen::Index>> rows(buckets.size());
  for (std::size_t i = 0; i < ages.size(); ++i) {
    rows[buckets.bucket_of(ages[i])].push_back(static_cast<Eigen::Index>(i));
  }
  Vector out(X.rows());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    if (rows[b].empty()) continue;
    out(rows[b]) = sevridge::predict(models[b], X(rows[b], Eigen::all));
  }
  return out;
}

}  // namespace sevridge
