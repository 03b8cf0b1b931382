#include "sevridge/triage.hpp"

#include <algorithm>
#include <cmath>

#include "sevridge/error.hpp"
#include "sevridge/text_io.hpp"

namespace sevridge {

void TriagePlan::validate() const {
  if (labels.size() != thresholds.size() + 1) {
    throw ValidationError("triage plan needs exactly one more label than thresholds");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!std::isfinite(thresholds[i])) {
      throw ValidationError("triage thresholds must be finite");
    }
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw ValidationError("triage thresholds must be strictly ascending");
    }
  }
  for (const auto& label : labels) {
    if (label.empty() || label.find_first_of(",\r\n") != std::string::npos) {
      throw ValidationError("triage labels must be non-empty and free of commas "
                            "and line breaks");
    }
  }
}

std::vector<std::string> default_labels(std::size_t k) {
  switch (k) {
    case 1: return {"all"};
    case 2: return {"low", "high"};
    case 3: return {"low", "medium", "high"};
    case 4: return {"low", "medium", "high", "critical"};
    default: break;
  }
  std::vector<std::string> labels;
  for (std::size_t i = 1; i <= k; ++i) labels.push_back("group-" + std::to_string(i));
  return labels;
}

TriagePlan build_plan(std::span<const double> severities, std::size_t k,
                      std::vector<std::string>* warnings) {
  if (k < 1) throw ValidationError("triage needs at least one group");
  if (severities.empty()) {
    throw ValidationError("cannot build a triage plan from zero severities");
  }
  std::vector<double> sorted(severities.begin(), severities.end());
  for (double s : sorted) {
    if (!std::isfinite(s)) throw ValidationError("severities must be finite");
  }
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = sorted.size();
  std::vector<double> thresholds;
  for (std::size_t j = 1; j < k; ++j) {
    const std::size_t rank = (j * n + k - 1) / k;  // ceil(j n / k), 1-based
    thresholds.push_back(sorted[std::max<std::size_t>(rank, 1) - 1]);
  }
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const std::size_t groups = thresholds.size() + 1;
  if (groups < k && warnings) {
    warnings->push_back("triage: " + std::to_string(k - groups) +
                        " quantile threshold(s) coincide; using " +
                        std::to_string(groups) + " groups instead of " +
                        std::to_string(k));
  }
  return TriagePlan{std::move(thresholds), default_labels(groups)};
}

std::size_t assign_bucket(const TriagePlan& plan, double severity) {
  if (!std::isfinite(severity)) {
    throw ValidationError("cannot triage a non-finite severity");
  }
  return static_cast<std::size_t>(
      std::lower_bound(plan.thresholds.begin(), plan.thresholds.end(), severity) -
      plan.thresholds.begin());
}

const std::string& assign(const TriagePlan& plan, double severity) {
  return plan.labels.at(assign_bucket(plan, severity));
}

std::string serialize_plan(const TriagePlan& plan) {
  plan.validate();
  std::string out = "threshold,label_below\n";
  for (std::size_t i = 0; i < plan.thresholds.size(); ++i) {
    out += format_double(plan.thresholds[i]);
    out += ',';
    out += plan.labels[i];
    out += '\n';
  }
  out += ',';
  out += plan.labels.back();
  out += '\n';
  return out;
}

TriagePlan parse_plan(std::string_view text, const std::string& source) {
  LineReader lines(text);
  std::string_view line;
  if (!lines.next(line) || line != "threshold,label_below") {
    throw ParseError(source, 1, 1, "expected header \"threshold,label_below\"");
  }
  TriagePlan plan;
  bool closed = false;
  while (lines.next(line)) {
    const std::size_t ln = lines.line_number();
    if (closed) {
      if (line.empty()) continue;
      throw ParseError(source, ln, 1, "rows after the final label row");
    }
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw ParseError(source, ln, 1, "expected 2 fields");
    if (fields[1].empty()) throw ParseError(source, ln, 2, "empty label");
    if (fields[0].empty()) {
      closed = true;
    } else {
      double t = 0;
      if (!parse_double(fields[0], t) || !std::isfinite(t)) {
        throw ParseError(source, ln, 1, "threshold is not a finite number");
      }
      if (!plan.thresholds.empty() && !(t > plan.thresholds.back())) {
        throw ParseError(source, ln, 1, "thresholds must be strictly ascending");
      }
      plan.thresholds.push_back(t);
    }
    plan.labels.emplace_back(fields[1]);
  }
  if (!closed) {
    throw ParseError(source, lines.line_number() + 1, 1,
                     "missing final row with empty threshold");
  }
  return plan;
}

void save_plan(const TriagePlan& plan, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_plan(plan));
}

TriagePlan load_plan(const std::filesystem::path& path) {
  return parse_plan(read_text_file(path), path.string());
}

}  // namespace sevridge
