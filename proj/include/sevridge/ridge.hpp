#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sevridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bayesian ridge regression with Gamma(shape, rate) hyperpriors on the noise
// precision alpha and the weight precision lambda. Defaults for the four
// prior parameters are the ones used throughout the severity pipeline.
struct RidgeConfig {
  double alpha_1 = 2.0;
  double alpha_2 = 0.01;
  double lambda_1 = 0.001;
  double lambda_2 = 0.01;
  std::optional<double> alpha_init;
  // Defaults to 1/Var(y), like alpha_init.
  std::optional<double> lambda_init;
  double tol = 1e-3;
  int max_iter = 300;
  bool fit_intercept = true;
  // Off: a single posterior solve at the initial (alpha, lambda).
  bool update_hyperparams = true;

  void validate() const;

  friend bool operator==(const RidgeConfig&, const RidgeConfig&) = default;
};

struct Posterior {
  Vector mean;
  Matrix covariance;
  // ln det(lambda I + alpha X^T X)
  double log_det_precision = 0.0;
};

// Sigma = (lambda I + alpha X^T X)^-1, mu = alpha Sigma X^T y.
// Throws SingularityError naming the failing Cholesky pivot.
Posterior solve_posterior(const Matrix& X, const Vector& y, double alpha,
                          double lambda);

// Design after the column preprocessing applied by fit(): centered (when
// fitting an intercept) and divided by the per-column root mean square of
// the centered values. Constant columns are zeroed and keep scale 1.
struct Standardization {
  Matrix X;
  Vector y;
  Vector x_offset;
  Vector x_scale;
  double y_offset = 0.0;
};

Standardization standardize(const Matrix& X, const Vector& y,
                            bool fit_intercept);

struct RidgeModel {
  // Original feature units.
  Vector coefficients;
  double intercept = 0.0;
  // Noise precision, in target units.
  double alpha = 1.0;
  // Weight precision, in standardized-feature units.
  double lambda = 1.0;
  // Posterior covariance of `coefficients`, original units.
  Matrix posterior_covariance;
  // Training column means (zeros without an intercept); the origin of the
  // quadratic form in predict_with_std.
  Vector x_offset;
  double effective_dof = 0.0;
  int n_iter = 0;
  bool converged = false;
  std::vector<double> log_evidence_trace;
  std::vector<double> dof_trace;
  RidgeConfig config;

  Eigen::Index n_features() const { return coefficients.size(); }
};

RidgeModel fit(const Matrix& X, const Vector& y, const RidgeConfig& config = {});

Vector predict(const RidgeModel& model, const Matrix& X);

struct PredictionWithStd {
  Vector mean;
  Vector std;
};

// Predictive std: sqrt(1/alpha + d^T Sigma d) with d = x - x_offset.
PredictionWithStd predict_with_std(const RidgeModel& model, const Matrix& X);

// Row-major nested vectors to a dense matrix; rejects empty and ragged input.
Matrix to_matrix(const std::vector<std::vector<double>>& rows);

// Age buckets [0, c1), [c1, c2), ..., [ck, 24] from ascending cutoffs.
struct AgeBuckets {
  std::vector<int> cutoffs;

  // 0-5, 6-11, 12-17, 18-24.
  static AgeBuckets standard();
  static AgeBuckets single();

  void validate() const;
  std::size_t size() const { return cutoffs.size() + 1; }
  std::size_t bucket_of(int age_months) const;
  int lower(std::size_t bucket) const;
  int upper(std::size_t bucket) const;  // inclusive
  std::string label(std::size_t bucket) const;
};

struct StratifiedModel {
  AgeBuckets buckets;
  std::vector<RidgeModel> models;

  Vector predict(const Matrix& X, std::span<const int> ages) const;
};

StratifiedModel fit_stratified(const Matrix& X, const Vector& y,
                               std::span<const int> ages,
                               const RidgeConfig& config,
                               const AgeBuckets& buckets = AgeBuckets::standard());

// Versioned key-value text format, 17 significant digits per number.
std::string serialize_model(const RidgeModel& model);
RidgeModel parse_model(std::string_view text, const std::string& source);
void save_model(const RidgeModel& model, const std::filesystem::path& path);
RidgeModel load_model(const std::filesystem::path& path);

}  // namespace sevridge
