#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sevridge/cohort.hpp"
#include "sevridge/ridge.hpp"

namespace sevridge {

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 42;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Fisher-Yates shuffle of 0..n-1 driven by SplitMix64(seed); the first
// ceil(test_fraction * n) shuffled indices are the test set. Both sides are
// kept non-empty.
Split train_test_split(std::size_t n_rows, const SplitSpec& spec);

double mse(std::span<const double> y_true, std::span<const double> y_pred);
// Throws DegenerateTargetError when y_true is constant or has < 2 entries.
double r2(std::span<const double> y_true, std::span<const double> y_pred);
// mse / population variance of y_true, so nmse + r2 == 1.
double nmse(std::span<const double> y_true, std::span<const double> y_pred);

enum class TargetKind { kPrecise, kNoisy };

struct EvalReport {
  double mse = 0.0;
  double r2 = 0.0;
  double nmse = 0.0;
  std::size_t n_test = 0;
  TargetKind target_kind = TargetKind::kPrecise;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport make_report(std::span<const double> y_true,
                       std::span<const double> y_pred, TargetKind kind);

struct EvalPair {
  EvalReport precise;
  EvalReport noisy;
};

// Predicts once and scores against both target kinds.
EvalPair evaluate(const RidgeModel& model, const Matrix& X_test,
                  std::span<const double> y_test_precise,
                  std::span<const double> y_test_noisy);

// Columns in CSV order: weight, age, virion count, gender.
Matrix design_matrix(std::span<const PatientRecord> records);
Matrix design_matrix(std::span<const LabeledSample> samples);

struct IterationResult {
  std::uint64_t seed = 0;
  EvalReport precise;
  EvalReport noisy;

  friend bool operator==(const IterationResult&, const IterationResult&) = default;
};

struct MeanMetrics {
  double mse = 0.0;
  double nmse = 0.0;
  double r2 = 0.0;

  friend bool operator==(const MeanMetrics&, const MeanMetrics&) = default;
};

struct ExperimentReport {
  std::vector<IterationResult> iterations;
  MeanMetrics mean_precise;
  MeanMetrics mean_noisy;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

struct ExperimentConfig {
  std::size_t n_samples = 100'000;
  std::size_t iterations = 10;
  std::uint64_t base_seed = 42;
  double test_fraction = 0.2;
  RidgeConfig ridge;
  unsigned threads = 0;

  void validate() const;
};

// Iteration k regenerates the cohort and reshuffles the split with seed
// base_seed + k, fits on the noisy training targets and scores both kinds.
ExperimentReport run_experiment(const ExperimentConfig& config);

// report.csv, mse.svg (normalized MSE, precise targets) and r2.svg
// (R^2, precise targets) inside out_dir, which is created if missing.
void emit_report(const ExperimentReport& report,
                 const std::filesystem::path& out_dir);

std::string report_csv(const ExperimentReport& report);

}  // namespace sevridge
