// CSV layout shared with other implementations of the pipeline:
//
//   x_data.csv           Weight,Age,Virion Count,Gender
//   y_data_precise.csv   Severity
//   y_data_variance.csv  Severity
//
// LF terminated, no quoting, doubles in shortest round-trip form.

#include <algorithm>
#include <cmath>
#include <string>

#include "sevridge/cohort.hpp"
#include "sevridge/error.hpp"
#include "sevridge/text_io.hpp"

namespace sevridge {

namespace {

constexpr std::string_view kXHeader = "Weight,Age,Virion Count,Gender";
constexpr std::string_view kYHeader = "Severity";

void expect_header(LineReader& lines, std::string_view expected,
                   const std::string& file) {
  std::string_view line;
  if (!lines.next(line)) {
    throw ParseError(file, 1, 1, "empty file, expected header \"" +
                                     std::string(expected) + "\"");
  }
  if (line != expected) {
    throw ParseError(file, 1, 1,
                     "bad header \"" + std::string(line) + "\", expected \"" +
                         std::string(expected) + "\"");
  }
}

}  // namespace

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "x_data.csv", dir / "y_data_precise.csv",
          dir / "y_data_variance.csv"};
}

void write_x_csv(std::span<const PatientRecord> records,
                 const std::filesystem::path& path) {
  std::string out;
  out.reserve(32 * (records.size() + 1));
  out += kXHeader;
  out += '\n';
  for (const auto& r : records) {
    out += format_double(r.weight_kg);
    out += ',';
    out += std::to_string(r.age_months);
    out += ',';
    out += std::to_string(r.virion_count);
    out += ',';
    out += std::to_string(static_cast<int>(r.sex));
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_y_csv(std::span<const double> values,
                 const std::filesystem::path& path) {
  std::string out;
  out.reserve(24 * (values.size() + 1));
  out += kYHeader;
  out += '\n';
  for (double v : values) {
    out += format_double(v);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<PatientRecord> read_x_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string text = read_text_file(path);
  LineReader lines(text);
  expect_header(lines, kXHeader, file);

  std::vector<PatientRecord> records;
  std::string_view line;
  while (lines.next(line)) {
    const std::size_t ln = lines.line_number();
    if (line.empty()) {
      throw ParseError(file, ln, 1, "empty row");
    }
    const auto fields = split_fields(line);
    if (fields.size() != 4) {
      throw ParseError(file, ln, std::min<std::size_t>(fields.size(), 5),
                       "expected 4 fields, found " +
                           std::to_string(fields.size()));
    }
    auto fail = [&](std::size_t column, const std::string& what) {
      return ParseError(file, ln, column,
                        what + " \"" + std::string(fields[column - 1]) + "\"");
    };

    PatientRecord r;
    if (!parse_double(fields[0], r.weight_kg) || !std::isfinite(r.weight_kg) ||
        r.weight_kg < 0) {
      throw fail(1, "weight must be a finite non-negative number, got");
    }
    long long age = 0;
    if (!parse_int64(fields[1], age) || age < 0 || age > kMaxAgeMonths) {
      throw fail(2, "age must be an integer in 0..24, got");
    }
    r.age_months = static_cast<int>(age);
    long long virions = 0;
    if (!parse_int64(fields[2], virions) || virions < 1 ||
        virions > kMaxVirionCount) {
      throw fail(3, "virion count must be an integer in 1..1e10, got");
    }
    r.virion_count = virions;
    long long gender = 0;
    if (!parse_int64(fields[3], gender) || (gender != 0 && gender != 1)) {
      throw fail(4, "gender must be 0 or 1, got");
    }
    r.sex = static_cast<Sex>(gender);
    records.push_back(r);
  }
  return records;
}

std::vector<double> read_y_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  const std::string text = read_text_file(path);
  LineReader lines(text);
  expect_header(lines, kYHeader, file);

  std::vector<double> values;
  std::string_view line;
  while (lines.next(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != 1) {
      throw ParseError(file, lines.line_number(), 2,
                       "expected a single value per row");
    }
    double v = 0;
    if (!parse_double(fields[0], v) || !std::isfinite(v)) {
      throw ParseError(file, lines.line_number(), 1,
                       "not a finite number: \"" + std::string(fields[0]) +
                           "\"");
    }
    values.push_back(v);
  }
  return values;
}

void write_dataset(std::span<const LabeledSample> samples,
                   const DatasetPaths& paths) {
  std::vector<PatientRecord> records;
  std::vector<double> precise;
  std::vector<double> noisy;
  records.reserve(samples.size());
  precise.reserve(samples.size());
  noisy.reserve(samples.size());
  for (const auto& s : samples) {
    records.push_back(s.record);
    precise.push_back(s.severity_precise);
    noisy.push_back(s.severity_noisy);
  }
  write_x_csv(records, paths.x);
  write_y_csv(precise, paths.y_precise);
  write_y_csv(noisy, paths.y_noisy);
}

std::vector<LabeledSample> read_dataset(const DatasetPaths& paths) {
  const auto records = read_x_csv(paths.x);
  const auto precise = read_y_csv(paths.y_precise);
  const auto noisy = read_y_csv(paths.y_noisy);

  auto check_rows = [&](const std::vector<double>& y,
                        const std::filesystem::path& p) {
    if (y.size() != records.size()) {
      // First line where the two files disagree (header is line 1).
      const std::size_t line = std::min(y.size(), records.size()) + 2;
      throw ParseError(p.string(), line, 1,
                       "row count " + std::to_string(y.size()) +
                           " does not match " + std::to_string(records.size()) +
                           " rows in " + paths.x.string());
    }
  };
  check_rows(precise, paths.y_precise);
  check_rows(noisy, paths.y_noisy);

  std::vector<LabeledSample> samples(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    samples[i] = {records[i], precise[i], noisy[i]};
  }
  return samples;
}

}  // namespace sevridge
