#include "sevridge/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sevridge/error.hpp"
#include "sevridge/parallel.hpp"
#include "sevridge/splitmix64.hpp"
#include "sevridge/svg_chart.hpp"
#include "sevridge/text_io.hpp"

namespace sevridge {

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie strictly between 0 and 1");
  }
}

Split train_test_split(std::size_t n_rows, const SplitSpec& spec) {
  spec.validate();
  if (n_rows < 2) {
    throw ValidationError("train/test split needs at least 2 rows");
  }
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(spec.seed);
  for (std::size_t i = n_rows - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(
        rng.randint(0, static_cast<std::int64_t>(i)));
    std::swap(order[i], order[j]);
  }

  // 0.2 * n lands a few ulps above an integer for many n; don't let that
  // round the test set up by a whole row.
  const double exact = spec.test_fraction * static_cast<double>(n_rows);
  const double nearest = std::round(exact);
  auto n_test = static_cast<std::size_t>(
      std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest
                                                               : std::ceil(exact));
  n_test = std::clamp<std::size_t>(n_test, 1, n_rows - 1);

  Split split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return split;
}

namespace {

void check_lengths(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ValidationError("metric inputs differ in length: " +
                          std::to_string(y_true.size()) + " vs " +
                          std::to_string(y_pred.size()));
  }
  if (y_true.empty()) throw ValidationError("metric inputs are empty");
}

double residual_sum_squares(std::span<const double> y_true,
                            std::span<const double> y_pred) {
  double ss = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_true[i] - y_pred[i];
    ss += d * d;
  }
  return ss;
}

double total_sum_squares(std::span<const double> y_true) {
  if (y_true.size() < 2) {
    throw DegenerateTargetError("r2 needs at least two target values");
  }
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) /
                      static_cast<double>(y_true.size());
  double ss = 0.0;
  for (double v : y_true) ss += (v - mean) * (v - mean);
  if (!(ss > 0.0)) {
    throw DegenerateTargetError("target values have zero variance");
  }
  return ss;
}

}  // namespace

double mse(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred);
  return residual_sum_squares(y_true, y_pred) / static_cast<double>(y_true.size());
}

double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred);
  return 1.0 - residual_sum_squares(y_true, y_pred) / total_sum_squares(y_true);
}

double nmse(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred);
  return residual_sum_squares(y_true, y_pred) / total_sum_squares(y_true);
}

EvalReport make_report(std::span<const double> y_true,
                       std::span<const double> y_pred, TargetKind kind) {
  EvalReport report;
  report.mse = mse(y_true, y_pred);
  report.nmse = nmse(y_true, y_pred);
  report.r2 = 1.0 - report.nmse;
  report.n_test = y_true.size();
  report.target_kind = kind;
  return report;
}

EvalPair evaluate(const RidgeModel& model, const Matrix& X_test,
                  std::span<const double> y_test_precise,
                  std::span<const double> y_test_noisy) {
  const auto rows = static_cast<std::size_t>(X_test.rows());
  if (y_test_precise.size() != rows || y_test_noisy.size() != rows) {
    throw ValidationError("test targets are not aligned with the test design");
  }
  const Vector pred = predict(model, X_test);
  const std::span<const double> p(pred.data(), rows);
  return {make_report(y_test_precise, p, TargetKind::kPrecise),
          make_report(y_test_noisy, p, TargetKind::kNoisy)};
}

Matrix design_matrix(std::span<const PatientRecord> records) {
  Matrix X(static_cast<Eigen::Index>(records.size()), 4);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    X(r, 0) = records[i].weight_kg;
    X(r, 1) = records[i].age_months;
    X(r, 2) = static_cast<double>(records[i].virion_count);
    X(r, 3) = static_cast<int>(records[i].sex);
  }
  return X;
}

Matrix design_matrix(std::span<const LabeledSample> samples) {
  std::vector<PatientRecord> records;
  records.reserve(samples.size());
  for (const auto& s : samples) records.push_back(s.record);
  return design_matrix(records);
}

void ExperimentConfig::validate() const {
  if (iterations < 1) throw ValidationError("iterations must be at least 1");
  if (n_samples < 2) throw ValidationError("n_samples must be at least 2");
  SplitSpec{test_fraction, base_seed}.validate();
  ridge.validate();
}

namespace {

IterationResult run_iteration(const ExperimentConfig& config, std::uint64_t seed,
                              unsigned generation_threads) {
  const auto cohort = generate({config.n_samples, seed, generation_threads});
  const Split split = train_test_split(cohort.size(), {config.test_fraction, seed});

  auto gather = [&](const std::vector<std::size_t>& idx, Matrix& X,
                    std::vector<double>& precise, std::vector<double>& noisy) {
    std::vector<PatientRecord> records;
    records.reserve(idx.size());
    precise.reserve(idx.size());
    noisy.reserve(idx.size());
    for (std::size_t i : idx) {
      records.push_back(cohort[i].record);
      precise.push_back(cohort[i].severity_precise);
      noisy.push_back(cohort[i].severity_noisy);
    }
    X = design_matrix(records);
  };

  Matrix X_train, X_test;
  std::vector<double> train_precise, train_noisy, test_precise, test_noisy;
  gather(split.train, X_train, train_precise, train_noisy);
  gather(split.test, X_test, test_precise, test_noisy);

  const Vector y_train = Eigen::Map<const Vector>(
      train_noisy.data(), static_cast<Eigen::Index>(train_noisy.size()));
  const RidgeModel model = fit(X_train, y_train, config.ridge);
  const EvalPair reports = evaluate(model, X_test, test_precise, test_noisy);
  return {seed, reports.precise, reports.noisy};
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.iterations.resize(config.iterations);

  const unsigned threads = resolve_threads(config.threads);
  // Parallelize over iterations when there are several; otherwise let the
  // single cohort use the threads.
  const bool per_iteration = config.iterations > 1 && threads > 1;
  parallel_for(config.iterations, per_iteration ? threads : 1, [&](std::size_t k) {
    report.iterations[k] = run_iteration(config, config.base_seed + k,
                                         per_iteration ? 1 : threads);
  });

  auto average = [&](auto member) {
    MeanMetrics m;
    for (const auto& it : report.iterations) {
      const EvalReport& r = it.*member;
      m.mse += r.mse;
      m.nmse += r.nmse;
      m.r2 += r.r2;
    }
    const auto n = static_cast<double>(report.iterations.size());
    m.mse /= n;
    m.nmse /= n;
    m.r2 /= n;
    return m;
  };
  report.mean_precise = average(&IterationResult::precise);
  report.mean_noisy = average(&IterationResult::noisy);
  return report;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "seed,mse_precise,nmse_precise,r2_precise,mse_noisy,nmse_noisy,r2_noisy\n";
  auto row = [&out](const std::string& key, const auto& precise, const auto& noisy) {
    out += key;
    for (double v : {precise.mse, precise.nmse, precise.r2, noisy.mse, noisy.nmse, noisy.r2}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  };
  for (const auto& it : report.iterations) {
    row(std::to_string(it.seed), it.precise, it.noisy);
  }
  row("mean", report.mean_precise, report.mean_noisy);
  return out;
}

void emit_report(const ExperimentReport& report,
                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir.string());

  write_file_atomic(out_dir / "report.csv", report_csv(report));

  BarChart mse_chart;
  mse_chart.title = "MSE per iteration (normalized, precise targets)";
  mse_chart.x_label = "Iteration seed";
  mse_chart.y_label = "MSE / Var(y)";
  BarChart r2_chart;
  r2_chart.title = "Coefficient of determination per iteration (precise targets)";
  r2_chart.x_label = "Iteration seed";
  r2_chart.y_label = "R²";
  for (const auto& it : report.iterations) {
    mse_chart.categories.push_back(std::to_string(it.seed));
    mse_chart.values.push_back(it.precise.nmse);
    r2_chart.categories.push_back(std::to_string(it.seed));
    r2_chart.values.push_back(it.precise.r2);
  }
  write_file_atomic(out_dir / "mse.svg", render_bar_chart(mse_chart));
  write_file_atomic(out_dir / "r2.svg", render_bar_chart(r2_chart));
}

}  // namespace sevridge
