#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "sevridge/error.hpp"
#include "sevridge/evalharness.hpp"
#include "sevridge/ridge.hpp"
#include "test_support.hpp"

using namespace sevridge;

namespace {

struct Instance {
  oracle::Rows rows;
  std::vector<double> y;
  Matrix X;
  Vector yv;
};

Instance random_instance(oracle::TestRng& rng, int n, int p, double noise = 0.1) {
  Instance inst;
  std::vector<double> w(static_cast<std::size_t>(p));
  for (auto& v : w) v = rng.uniform(-3.0, 3.0);
  inst.X.resize(n, p);
  inst.yv.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    double target = rng.uniform(-1.0, 1.0) * noise + 0.5;
    for (int j = 0; j < p; ++j) {
      const double x = rng.uniform(-2.0, 2.0) * (1.0 + j);
      row.push_back(x);
      inst.X(i, j) = x;
      target += w[static_cast<std::size_t>(j)] * x;
    }
    inst.rows.push_back(row);
    inst.y.push_back(target);
    inst.yv(i) = target;
  }
  return inst;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("solve_posterior: zero target gives zero mean") {
  oracle::TestRng rng(1);
  const auto inst = random_instance(rng, 30, 3);
  const Posterior post = solve_posterior(inst.X, Vector::Zero(30), 2.0, 0.5);
  CHECK(post.mean.isZero(0.0));
}

TEST_CASE("solve_posterior: heavy regularization shrinks the mean") {
  oracle::TestRng rng(2);
  const auto inst = random_instance(rng, 40, 3);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-2, 1e2, 1e6, 1e10}) {
    const double norm = solve_posterior(inst.X, inst.yv, 1.0, lambda).mean.norm();
    CHECK(norm < previous);
    previous = norm;
  }
  CHECK(previous < 1e-6);
}

TEST_CASE("solve_posterior matches the normal-equations ridge solve") {
  oracle::TestRng rng(50);
  const auto inst = random_instance(rng, 50, 4);
  const double alpha = 3.0, lambda = 0.7;
  const Posterior post = solve_posterior(inst.X, inst.yv, alpha, lambda);

  // Raw (unstandardized) system (X^T X + (lambda/alpha) I) w = X^T y.
  oracle::Rows a(4, std::vector<double>(4, 0.0));
  std::vector<double> b(4, 0.0);
  for (std::size_t i = 0; i < inst.rows.size(); ++i) {
    for (std::size_t r = 0; r < 4; ++r) {
      b[r] += inst.rows[i][r] * inst.y[i];
      for (std::size_t c = 0; c < 4; ++c) a[r][c] += inst.rows[i][r] * inst.rows[i][c];
    }
  }
  for (std::size_t r = 0; r < 4; ++r) a[r][r] += lambda / alpha;
  const auto w = oracle::solve_dense(a, b);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::abs(post.mean(static_cast<Eigen::Index>(j)) - w[j]) <= 1e-8 * max_abs(w));
  }

  // Sigma is the inverse of the precision matrix, symmetric.
  Matrix precision = alpha * inst.X.transpose() * inst.X;
  precision.diagonal().array() += lambda;
  CHECK((precision * post.covariance - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((post.covariance - post.covariance.transpose()).cwiseAbs().maxCoeff() <=
        1e-12 * post.covariance.cwiseAbs().maxCoeff());
  CHECK(post.log_det_precision == doctest::Approx(std::log(precision.determinant())).epsilon(1e-10));
}

TEST_CASE("solve_posterior errors") {
  // Rank one Gram matrix; the tiny lambda is lost to rounding.
  Matrix X{{1.0, 1.0}};
  Vector y{{1.0}};
  try {
    solve_posterior(X, y, 1.0, 1e-300);
    FAIL("expected singularity");
  } catch (const SingularityError& e) {
    CHECK(e.pivot() == 1);
    CHECK(std::string(e.what()).find("pivot 1") != std::string::npos);
  }
  X(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_posterior(X, y, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(solve_posterior(Matrix::Ones(1, 2), y, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(solve_posterior(Matrix::Ones(3, 2), y, 1.0, 1.0), ValidationError);
}

TEST_CASE("fit: all-zero target") {
  oracle::TestRng rng(3);
  const auto inst = random_instance(rng, 25, 3);
  const RidgeModel m = fit(inst.X, Vector::Zero(25));
  CHECK(m.coefficients.isZero(0.0));
  CHECK(m.intercept == 0.0);
}

TEST_CASE("fit recovers y = 2x + 1") {
  Matrix X(100, 1);
  Vector y(100);
  for (int i = 0; i < 100; ++i) {
    X(i, 0) = i / 99.0;
    y(i) = 2.0 * X(i, 0) + 1.0;
  }
  const RidgeModel m = fit(X, y);
  CHECK(std::abs(m.coefficients(0) - 2.0) < 1e-3);
  CHECK(std::abs(m.intercept - 1.0) < 1e-3);
  CHECK(m.converged);
}

TEST_CASE("fit with fixed hyperparameters is a single posterior solve") {
  oracle::TestRng rng(4);
  const auto inst = random_instance(rng, 60, 3);
  RidgeConfig cfg;
  cfg.update_hyperparams = false;
  cfg.alpha_init = 1.0;
  cfg.lambda_init = 1.0;
  const RidgeModel m = fit(inst.X, inst.yv, cfg);

  const Standardization s = standardize(inst.X, inst.yv, true);
  const Posterior post = solve_posterior(s.X, s.y, 1.0, 1.0);
  CHECK(m.coefficients == post.mean.cwiseQuotient(s.x_scale));
  CHECK(m.alpha == 1.0);
  CHECK(m.lambda == 1.0);
  CHECK(m.n_iter == 1);
  CHECK(m.log_evidence_trace.size() == 1);
}

TEST_CASE("fixed-hyperparameter fit equals the independent ridge oracle") {
  oracle::TestRng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.integer(10, 200);
    const int p = rng.integer(1, 8);
    const auto inst = random_instance(rng, n, p, 0.5);
    RidgeConfig cfg;
    cfg.update_hyperparams = false;
    cfg.alpha_init = rng.uniform(0.1, 10.0);
    cfg.lambda_init = rng.uniform(0.01, 10.0);
    const RidgeModel m = fit(inst.X, inst.yv, cfg);
    const auto ref = oracle::ridge_normal_equations(inst.rows, inst.y,
                                                    *cfg.lambda_init / *cfg.alpha_init);
    const double scale = max_abs(ref.coefficients);
    for (int j = 0; j < p; ++j) {
      REQUIRE(std::abs(m.coefficients(j) - ref.coefficients[static_cast<std::size_t>(j)]) <=
              1e-8 * scale);
    }
    CHECK(std::abs(m.intercept - ref.intercept) <= 1e-8 * std::max(1.0, std::abs(ref.intercept)));
  }
}

TEST_CASE("fit invariants: covariance, dof, evidence") {
  oracle::TestRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = rng.integer(1, 6);
    const auto inst = random_instance(rng, rng.integer(p + 5, 150), p, 1.0);
    const RidgeModel m = fit(inst.X, inst.yv);
    const Matrix& S = m.posterior_covariance;
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * S.cwiseAbs().maxCoeff());
    Eigen::LLT<Matrix> llt(S);
    CHECK(llt.info() == Eigen::Success);
    CHECK(m.alpha > 0);
    CHECK(m.lambda > 0);
    CHECK(m.effective_dof >= 0.0);
    CHECK(m.effective_dof <= p);
    for (double g : m.dof_trace) {
      CHECK(g >= 0.0);
      CHECK(g <= p);
    }
    REQUIRE(!m.log_evidence_trace.empty());
    for (double e : m.log_evidence_trace) CHECK(std::isfinite(e));
    CHECK(m.log_evidence_trace.back() >= m.log_evidence_trace.front());
  }
}

TEST_CASE("converged means the last coefficient step was below tol") {
  oracle::TestRng rng(6);
  const auto inst = random_instance(rng, 80, 3, 2.0);
  RidgeConfig cfg;
  cfg.tol = 1e-10;
  const RidgeModel m = fit(inst.X, inst.yv, cfg);
  REQUIRE(m.converged);
  REQUIRE(m.n_iter >= 3);

  // A run capped at j iterations ends with the posterior of iteration j, so
  // the two capped runs below expose the last two iterates.
  const Standardization s = standardize(inst.X, inst.yv, true);
  auto iterate = [&](int j) {
    RidgeConfig capped = cfg;
    capped.max_iter = j;
    const RidgeModel r = fit(inst.X, inst.yv, capped);
    CHECK_FALSE(r.converged);
    return Vector(r.coefficients.cwiseProduct(s.x_scale));
  };
  const Vector last = iterate(m.n_iter - 1);
  const Vector before = iterate(m.n_iter - 2);
  CHECK((last - before).lpNorm<1>() < cfg.tol);
}

TEST_CASE("adding a constant to y shifts predictions by that constant") {
  oracle::TestRng rng(8);
  const auto inst = random_instance(rng, 70, 3, 0.5);
  const double c = 1234.5;
  const RidgeModel a = fit(inst.X, inst.yv);
  const RidgeModel b = fit(inst.X, (inst.yv.array() + c).matrix());
  const Vector pa = predict(a, inst.X);
  const Vector pb = predict(b, inst.X);
  CHECK(((pb.array() - c) - pa.array()).abs().maxCoeff() < 1e-9 * (c + pa.cwiseAbs().maxCoeff()));
  CHECK(a.n_iter == b.n_iter);
  CHECK(b.alpha == doctest::Approx(a.alpha).epsilon(1e-9));
  CHECK(b.lambda == doctest::Approx(a.lambda).epsilon(1e-9));
}

TEST_CASE("fit validation") {
  Matrix X = Matrix::Ones(3, 2);
  Vector y = Vector::Ones(3);
  CHECK_THROWS_AS(fit(Matrix(0, 2), Vector(0)), ValidationError);
  CHECK_THROWS_AS(fit(X, Vector::Ones(2)), ValidationError);
  y(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit(X, y), ValidationError);
  RidgeConfig bad;
  bad.alpha_1 = 0;
  CHECK_THROWS_AS(fit(X, Vector::Ones(3), bad), ValidationError);
  CHECK_THROWS_AS(to_matrix({{1, 2}, {3}}), ValidationError);
  CHECK_THROWS_AS(to_matrix({}), ValidationError);
  CHECK(to_matrix({{1, 2}, {3, 4}})(1, 0) == 3);
}

TEST_CASE("constant columns get a zero coefficient") {
  oracle::TestRng rng(9);
  auto inst = random_instance(rng, 50, 3);
  inst.X.col(1).setConstant(0.1);
  const RidgeModel m = fit(inst.X, inst.yv);
  CHECK(m.coefficients(1) == 0.0);
  CHECK(predict(m, inst.X).allFinite());
}

TEST_CASE("predict") {
  RidgeModel m;
  m.coefficients = Vector::Zero(2);
  m.intercept = 4.5;
  CHECK((predict(m, Matrix::Random(5, 2)).array() == 4.5).all());

  m.coefficients = Vector{{1.0, 2.0}};
  m.intercept = 3.0;
  CHECK(predict(m, Matrix{{4.0, 5.0}})(0) == 17.0);
  CHECK_THROWS_AS(predict(m, Matrix::Ones(1, 3)), ValidationError);
}

TEST_CASE("predict_with_std") {
  oracle::TestRng rng(20);
  const auto inst = random_instance(rng, 20, 2, 0.3);
  const RidgeModel m = fit(inst.X, inst.yv);
  const PredictionWithStd p = predict_with_std(m, inst.X);
  CHECK(p.mean == predict(m, inst.X));
  const double floor = std::sqrt(1.0 / m.alpha);
  oracle::Rows sigma(2, std::vector<double>(2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) sigma[i][j] = m.posterior_covariance(i, j);
  for (Eigen::Index i = 0; i < inst.X.rows(); ++i) {
    CHECK(p.std(i) >= floor);
    const std::vector<double> d{inst.X(i, 0) - m.x_offset(0), inst.X(i, 1) - m.x_offset(1)};
    const double var = oracle::quadratic_form(sigma, d) + 1.0 / m.alpha;
    CHECK(std::abs(p.std(i) * p.std(i) - var) <= 1e-12 * var);
  }
  const PredictionWithStd at_center = predict_with_std(m, m.x_offset.transpose());
  CHECK(at_center.std(0) == doctest::Approx(floor).epsilon(1e-14));
}

TEST_CASE("age buckets") {
  const AgeBuckets b = AgeBuckets::standard();
  CHECK_NOTHROW(b.validate());
  CHECK(b.size() == 4);
  CHECK(b.bucket_of(0) == 0);
  CHECK(b.bucket_of(5) == 0);
  CHECK(b.bucket_of(6) == 1);
  CHECK(b.bucket_of(17) == 2);
  CHECK(b.bucket_of(24) == 3);
  CHECK(b.label(3) == "18-24");
  CHECK_THROWS_AS(b.bucket_of(25), RangeError);
  CHECK_THROWS_AS((AgeBuckets{{6, 6}}).validate(), ValidationError);
  CHECK_THROWS_AS((AgeBuckets{{0}}).validate(), ValidationError);
  CHECK_THROWS_AS((AgeBuckets{{25}}).validate(), ValidationError);
}

TEST_CASE("fit_stratified") {
  const auto cohort = generate({4000, 11, 1});
  const Matrix X = design_matrix(cohort);
  Vector y(X.rows());
  std::vector<int> ages;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = cohort[i].severity_noisy;
    ages.push_back(cohort[i].record.age_months);
  }

  SUBCASE("single bucket reproduces the pooled fit") {
    const StratifiedModel s = fit_stratified(X, y, ages, {}, AgeBuckets::single());
    CHECK(s.predict(X, ages) == predict(fit(X, y), X));
  }
  SUBCASE("standard buckets") {
    const StratifiedModel s = fit_stratified(X, y, ages, {});
    CHECK(s.models.size() == 4);
    CHECK(s.predict(X, ages).allFinite());
  }
  SUBCASE("empty bucket is reported by name") {
    std::vector<int> young(ages.size(), 3);
    try {
      fit_stratified(X, y, young, {});
      FAIL("expected validation error");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find("6-11") != std::string::npos);
      CHECK(what.find("18-24") != std::string::npos);
    }
  }
}

TEST_CASE("model file round trip") {
  oracle::TestRng rng(30);
  const auto inst = random_instance(rng, 90, 4, 0.7);
  RidgeConfig cfg;
  cfg.alpha_init = 0.3;
  const RidgeModel m = fit(inst.X, inst.yv, cfg);

  testing::TempDir dir;
  save_model(m, dir / "model.txt");
  const RidgeModel back = load_model(dir / "model.txt");
  CHECK(back.coefficients == m.coefficients);
  CHECK(back.intercept == m.intercept);
  CHECK(back.alpha == m.alpha);
  CHECK(back.lambda == m.lambda);
  CHECK(back.posterior_covariance == m.posterior_covariance);
  CHECK(back.x_offset == m.x_offset);
  CHECK(back.log_evidence_trace == m.log_evidence_trace);
  CHECK(back.dof_trace == m.dof_trace);
  CHECK(back.config == m.config);
  CHECK(back.n_iter == m.n_iter);
  CHECK(back.converged == m.converged);

  const auto held_out = random_instance(rng, 40, 4);
  CHECK(predict(back, held_out.X) == predict(m, held_out.X));
  CHECK(predict_with_std(back, held_out.X).std == predict_with_std(m, held_out.X).std);
}

TEST_CASE("model file errors") {
  RidgeModel m;
  m.coefficients = Vector::Ones(2);
  m.x_offset = Vector::Zero(2);
  m.posterior_covariance = Matrix::Identity(2, 2);
  const std::string text = serialize_model(m);
  CHECK_NOTHROW(parse_model(text, "ok"));
  CHECK_THROWS_AS(parse_model("sevridge-model 2\n", "v2"), sevridge::ParseError);
  CHECK_THROWS_AS(parse_model("hello\n", "junk"), sevridge::ParseError);

  std::string missing = text;
  missing.erase(missing.find("alpha "), missing.find('\n', missing.find("alpha ")) -
                                            missing.find("alpha ") + 1);
  CHECK_THROWS_WITH_AS(parse_model(missing, "m"), doctest::Contains("missing key \"alpha\""),
                       sevridge::ParseError);

  std::string short_sigma = text;
  const auto pos = short_sigma.find("posterior_covariance");
  short_sigma.replace(pos, short_sigma.find('\n', pos) - pos, "posterior_covariance 1 0 0");
  CHECK_THROWS_AS(parse_model(short_sigma, "m"), sevridge::ParseError);
}
