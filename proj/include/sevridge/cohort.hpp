#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "sevridge/splitmix64.hpp"

namespace sevridge {

inline constexpr int kMaxAgeMonths = 24;
inline constexpr std::size_t kAgeCount = kMaxAgeMonths + 1;
inline constexpr std::int64_t kMaxVirionCount = 10'000'000'000LL;
inline constexpr double kMaxVarianceDraw = 1e-4;

enum class Sex : int { kMale = 0, kFemale = 1 };

using WeightList = std::array<double, kAgeCount>;

// Sex-specific weight bounds in kg, indexed by age in months 0..24.
struct WeightTables {
  WeightList male_high;
  WeightList male_low;
  WeightList female_high;
  WeightList female_low;

  const WeightList& high(Sex sex) const {
    return sex == Sex::kMale ? male_high : female_high;
  }
  const WeightList& low(Sex sex) const {
    return sex == Sex::kMale ? male_low : female_low;
  }
};

// The built-in growth tables used for every generated cohort.
const WeightTables& weight_tables();

struct PatientRecord {
  int age_months = 0;
  Sex sex = Sex::kMale;
  double weight_kg = 0.0;
  std::int64_t virion_count = 1;

  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

struct LabeledSample {
  PatientRecord record;
  double severity_precise = 0.0;
  double severity_noisy = 0.0;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct GenerationConfig {
  std::size_t n_samples = 1'000'000;
  std::uint64_t master_seed = 42;
  // 0 selects std::thread::hardware_concurrency(). Output does not depend on it.
  unsigned threads = 0;

  void validate() const;
};

// Midpoint of the high/low table entries. Throws RangeError for ages
// outside 0..24.
double acceptable_weight(Sex sex, int age_months);

// (1 - age/24) * v + |(w* - w) / w*| * v^2 with w* the acceptable weight.
double severity(const PatientRecord& record);

// severity * (1 + u) for a noise draw u in [-1e-4, 1e-4].
double apply_variance(double severity, double u);

struct RecordDraw {
  PatientRecord record;
  double variance_draw = 0.0;
};

// Draw order: age, virion count, sex, weight, variance draw.
RecordDraw sample_record(SplitMix64& stream);

// Sample i is drawn from SplitMix64::for_stream(master_seed, i).
LabeledSample generate_sample(std::uint64_t master_seed, std::uint64_t index);

std::vector<LabeledSample> generate(const GenerationConfig& config);

struct DatasetPaths {
  std::filesystem::path x;
  std::filesystem::path y_precise;
  std::filesystem::path y_noisy;

  // x_data.csv, y_data_precise.csv and y_data_variance.csv inside `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

void write_dataset(std::span<const LabeledSample> samples,
                   const DatasetPaths& paths);
std::vector<LabeledSample> read_dataset(const DatasetPaths& paths);

// Single-file readers, used when X and targets are handled separately.
std::vector<PatientRecord> read_x_csv(const std::filesystem::path& path);
std::vector<double> read_y_csv(const std::filesystem::path& path);
void write_x_csv(std::span<const PatientRecord> records,
                 const std::filesystem::path& path);
void write_y_csv(std::span<const double> values,
                 const std::filesystem::path& path);

}  // namespace sevridge
