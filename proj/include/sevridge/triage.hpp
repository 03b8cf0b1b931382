#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sevridge {

// k priority groups separated by k-1 strictly ascending thresholds. Bucket j
// covers (t[j-1], t[j]]: a severity equal to a threshold stays in the lower
// group, the last group takes everything above t[k-2].
struct TriagePlan {
  std::vector<double> thresholds;
  std::vector<std::string> labels;

  void validate() const;
  std::size_t size() const { return labels.size(); }

  friend bool operator==(const TriagePlan&, const TriagePlan&) = default;
};

// low / medium / high for k = 3; see triage.cpp for other k.
std::vector<std::string> default_labels(std::size_t k);

// Thresholds at the nearest-rank j/k quantiles, j = 1..k-1. Coinciding
// quantiles are merged, which lowers k; a note is appended to `warnings`
// when that happens.
TriagePlan build_plan(std::span<const double> severities, std::size_t k = 3,
                      std::vector<std::string>* warnings = nullptr);

std::size_t assign_bucket(const TriagePlan& plan, double severity);
const std::string& assign(const TriagePlan& plan, double severity);

// CSV: header "threshold,label_below", one row per threshold, then a final
// row with an empty threshold carrying the top label.
std::string serialize_plan(const TriagePlan& plan);
TriagePlan parse_plan(std::string_view text, const std::string& source);
void save_plan(const TriagePlan& plan, const std::filesystem::path& path);
TriagePlan load_plan(const std::filesystem::path& path);

}  // namespace sevridge
