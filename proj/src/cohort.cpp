#include "sevridge/cohort.hpp"

#include <cmath>
#include <string>

#include "sevridge/error.hpp"
#include "sevridge/parallel.hpp"

namespace sevridge {

const WeightTables& weight_tables() {
  static const WeightTables tables{
      .male_high = {3.9, 5.1, 6.3, 7.2, 7.9, 8.4, 8.9, 9.3, 9.6,
                    10.0, 10.3, 10.5, 10.8, 11.1, 11.3, 11.6, 11.8, 12.0,
                    12.3, 12.5, 12.7, 13.0, 13.2, 13.4, 13.7},
      .male_low = {2.9, 3.9, 4.9, 5.6, 6.2, 6.7, 7.1, 7.4, 7.7,
                   7.9, 8.2, 8.4, 8.6, 8.8, 9.0, 9.2, 9.4, 9.6,
                   9.7, 9.9, 10.1, 10.3, 10.5, 10.6, 10.8},
      .female_high = {3.7, 4.8, 5.9, 6.7, 7.3, 7.8, 8.3, 8.7, 9.0,
                      9.3, 9.6, 9.9, 10.2, 10.4, 10.7, 10.9, 11.2, 11.4,
                      11.6, 11.9, 12.1, 12.4, 12.6, 12.8, 13.1},
      .female_low = {2.9, 3.6, 4.5, 5.1, 5.6, 6.1, 6.4, 6.7, 7.0,
                     7.3, 7.5, 7.7, 7.9, 8.1, 8.3, 8.5, 8.7, 8.8,
                     9.0, 9.2, 9.4, 9.6, 9.8, 9.9, 10.1},
  };
  return tables;
}

void GenerationConfig::validate() const {
  if (n_samples < 1) {
    throw ValidationError("n_samples must be at least 1");
  }
}

namespace {

void check_age(int age_months) {
  if (age_months < 0 || age_months > kMaxAgeMonths) {
    throw RangeError("age_months must be in 0..24, got " +
                     std::to_string(age_months));
  }
}

double weight_span(Sex sex, int age_months) {
  const auto& t = weight_tables();
  const auto a = static_cast<std::size_t>(age_months);
  return t.high(sex)[a] + t.low(sex)[a];
}

}  // namespace

double acceptable_weight(Sex sex, int age_months) {
  check_age(age_months);
  return weight_span(sex, age_months) / 2;
}

double severity(const PatientRecord& record) {
  const double target = acceptable_weight(record.sex, record.age_months);
  const double v = static_cast<double>(record.virion_count);
  const double age_coeff = 1.0 - record.age_months / 24.0;
  const double weight_coeff = std::abs((target - record.weight_kg) / target);
  return age_coeff * v + weight_coeff * (v * v);
}

double apply_variance(double severity, double u) {
  if (!(u >= -kMaxVarianceDraw && u <= kMaxVarianceDraw)) {
    throw RangeError("variance draw must lie in [-1e-4, 1e-4]");
  }
  return severity * (1.0 + u);
}

RecordDraw sample_record(SplitMix64& stream) {
  RecordDraw draw;
  PatientRecord& r = draw.record;
  r.age_months = static_cast<int>(stream.randint(0, kMaxAgeMonths));
  r.virion_count = stream.randint(1, kMaxVirionCount);
  r.sex = static_cast<Sex>(stream.randint(0, 1));
  r.weight_kg = stream.uniform(0.0, weight_span(r.sex, r.age_months));
  draw.variance_draw = stream.uniform(-kMaxVarianceDraw, kMaxVarianceDraw);
  return draw;
}

LabeledSample generate_sample(std::uint64_t master_seed, std::uint64_t index) {
  auto stream = SplitMix64::for_stream(master_seed, index);
  const RecordDraw draw = sample_record(stream);
  LabeledSample sample;
  sample.record = draw.record;
  sample.severity_precise = severity(draw.record);
  sample.severity_noisy = apply_variance(sample.severity_precise,
                                         draw.variance_draw);
  return sample;
}

std::vector<LabeledSample> generate(const GenerationConfig& config) {
  config.validate();
  std::vector<LabeledSample> samples(config.n_samples);
  // Small cohorts are not worth the thread start-up.
  const unsigned threads = config.n_samples < 4096 ? 1 : config.threads;
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    samples[i] = generate_sample(config.master_seed, i);
  });
  return samples;
}

}  // namespace sevridge
