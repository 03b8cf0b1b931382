// Model file layout (one key per line, values separated by single spaces):
//
//   sevridge-model 1
//   p <features>
//   coefficients <p values>
//   intercept <value>
//   ...
//   posterior_covariance <p*p values, row-major>
//   config.alpha_init <value|none>
//
// Lines starting with '#' are ignored. Every number is written with 17
// significant digits so a reload is bit-exact.

#include <algorithm>
#include <map>
#include <optional>

#include "sevridge/error.hpp"
#include "sevridge/ridge.hpp"
#include "sevridge/text_io.hpp"

namespace sevridge {

namespace {

constexpr std::string_view kMagic = "sevridge-model";
constexpr int kFormatVersion = 1;

void put(std::string& out, std::string_view key, double value) {
  out += key;
  out += ' ';
  out += format_double17(value);
  out += '\n';
}

void put(std::string& out, std::string_view key, std::string_view value) {
  out += key;
  out += ' ';
  out += value;
  out += '\n';
}

template <typename Range>
void put_list(std::string& out, std::string_view key, const Range& values) {
  out += key;
  for (double v : values) {
    out += ' ';
    out += format_double17(v);
  }
  out += '\n';
}

struct Entry {
  std::size_t line = 0;
  std::vector<std::string_view> values;
};

std::vector<std::string_view> split_spaces(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = text.find_first_not_of(' ', pos);
    if (start == std::string_view::npos) break;
    const std::size_t end = std::min(text.find(' ', start), text.size());
    tokens.push_back(text.substr(start, end - start));
    pos = end;
  }
  return tokens;
}

class EntryTable {
 public:
  EntryTable(std::map<std::string, Entry, std::less<>> entries,
             std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  const Entry& get(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw ParseError(source_, 1, 1, "missing key \"" + std::string(key) + "\"");
    }
    return it->second;
  }

  std::vector<double> numbers(std::string_view key,
                              std::optional<std::size_t> count) const {
    const Entry& e = get(key);
    if (count && e.values.size() != *count) {
      throw ParseError(source_, e.line, 1,
                       std::string(key) + " expects " + std::to_string(*count) +
                           " values, found " + std::to_string(e.values.size()));
    }
    std::vector<double> out;
    out.reserve(e.values.size());
    for (std::size_t i = 0; i < e.values.size(); ++i) {
      double v = 0;
      if (!parse_double(e.values[i], v)) {
        throw ParseError(source_, e.line, i + 2,
                         "not a number: \"" + std::string(e.values[i]) + "\"");
      }
      out.push_back(v);
    }
    return out;
  }

  double number(std::string_view key) const { return numbers(key, 1).front(); }

  std::optional<double> optional_number(std::string_view key) const {
    const Entry& e = get(key);
    if (e.values.size() == 1 && e.values.front() == "none") return std::nullopt;
    return number(key);
  }

  long long integer(std::string_view key) const {
    const Entry& e = get(key);
    long long v = 0;
    if (e.values.size() != 1 || !parse_int64(e.values.front(), v)) {
      throw ParseError(source_, e.line, 2,
                       std::string(key) + " expects a single integer");
    }
    return v;
  }

  bool flag(std::string_view key) const {
    const long long v = integer(key);
    if (v != 0 && v != 1) {
      throw ParseError(source_, get(key).line, 2,
                       std::string(key) + " expects 0 or 1");
    }
    return v == 1;
  }

 private:
  std::map<std::string, Entry, std::less<>> entries_;
  std::string source_;
};

Vector to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string serialize_model(const RidgeModel& model) {
  const Eigen::Index p = model.n_features();
  std::string out;
  out += kMagic;
  out += ' ';
  out += std::to_string(kFormatVersion);
  out += '\n';
  put(out, "p", std::to_string(p));
  put_list(out, "coefficients", model.coefficients);
  put(out, "intercept", model.intercept);
  put(out, "alpha", model.alpha);
  put(out, "lambda", model.lambda);
  put_list(out, "x_offset", model.x_offset);
  std::vector<double> sigma;
  sigma.reserve(static_cast<std::size_t>(p * p));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) sigma.push_back(model.posterior_covariance(i, j));
  }
  put_list(out, "posterior_covariance", sigma);
  put(out, "effective_dof", model.effective_dof);
  put(out, "n_iter", std::to_string(model.n_iter));
  put(out, "converged", model.converged ? "1" : "0");
  put_list(out, "log_evidence_trace", model.log_evidence_trace);
  put_list(out, "dof_trace", model.dof_trace);

  const RidgeConfig& c = model.config;
  put(out, "config.alpha_1", c.alpha_1);
  put(out, "config.alpha_2", c.alpha_2);
  put(out, "config.lambda_1", c.lambda_1);
  put(out, "config.lambda_2", c.lambda_2);
  put(out, "config.alpha_init",
      c.alpha_init ? format_double17(*c.alpha_init) : std::string("none"));
  put(out, "config.lambda_init",
      c.lambda_init ? format_double17(*c.lambda_init) : std::string("none"));
  put(out, "config.tol", c.tol);
  put(out, "config.max_iter", std::to_string(c.max_iter));
  put(out, "config.fit_intercept", c.fit_intercept ? "1" : "0");
  put(out, "config.update_hyperparams", c.update_hyperparams ? "1" : "0");
  return out;
}

RidgeModel parse_model(std::string_view text, const std::string& source) {
  LineReader lines(text);
  std::string_view line;
  if (!lines.next(line)) throw ParseError(source, 1, 1, "empty model file");
  const auto magic = split_spaces(line);
  if (magic.size() != 2 || magic[0] != kMagic) {
    throw ParseError(source, 1, 1, "not a sevridge model file");
  }
  long long version = 0;
  if (!parse_int64(magic[1], version) || version != kFormatVersion) {
    throw ParseError(source, 1, magic[0].size() + 2,
                     "unsupported model format version \"" +
                         std::string(magic[1]) + "\"");
  }

  std::map<std::string, Entry, std::less<>> entries;
  while (lines.next(line)) {
    if (line.empty() || line.front() == '#') continue;
    auto tokens = split_spaces(line);
    if (tokens.empty()) continue;
    std::string key(tokens.front());
    tokens.erase(tokens.begin());
    if (!entries.emplace(key, Entry{lines.line_number(), std::move(tokens)}).second) {
      throw ParseError(source, lines.line_number(), 1, "duplicate key \"" + key + "\"");
    }
  }
  const EntryTable table(std::move(entries), source);

  const long long p = table.integer("p");
  if (p < 1) throw ParseError(source, table.get("p").line, 2, "p must be >= 1");
  const auto pu = static_cast<std::size_t>(p);

  RidgeModel model;
  model.coefficients = to_vector(table.numbers("coefficients", pu));
  model.intercept = table.number("intercept");
  model.alpha = table.number("alpha");
  model.lambda = table.number("lambda");
  model.x_offset = to_vector(table.numbers("x_offset", pu));
  const auto sigma = table.numbers("posterior_covariance", pu * pu);
  model.posterior_covariance.resize(p, p);
  for (std::size_t i = 0; i < pu; ++i) {
    for (std::size_t j = 0; j < pu; ++j) {
      model.posterior_covariance(static_cast<Eigen::Index>(i),
                                 static_cast<Eigen::Index>(j)) = sigma[i * pu + j];
    }
  }
  model.effective_dof = table.number("effective_dof");
  model.n_iter = static_cast<int>(table.integer("n_iter"));
  model.converged = table.flag("converged");
  model.log_evidence_trace = table.numbers("log_evidence_trace", std::nullopt);
  model.dof_trace = table.numbers("dof_trace", std::nullopt);

  RidgeConfig& c = model.config;
  c.alpha_1 = table.number("config.alpha_1");
  c.alpha_2 = table.number("config.alpha_2");
  c.lambda_1 = table.number("config.lambda_1");
  c.lambda_2 = table.number("config.lambda_2");
  c.alpha_init = table.optional_number("config.alpha_init");
  c.lambda_init = table.optional_number("config.lambda_init");
  c.tol = table.number("config.tol");
  c.max_iter = static_cast<int>(table.integer("config.max_iter"));
  c.fit_intercept = table.flag("config.fit_intercept");
  c.update_hyperparams = table.flag("config.update_hyperparams");

  if (!(model.alpha > 0) || !(model.lambda > 0)) {
    throw ParseError(source, table.get("alpha").line, 2,
                     "alpha and lambda must be > 0");
  }
  return model;
}

void save_model(const RidgeModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

RidgeModel load_model(const std::filesystem::path& path) {
  return parse_model(read_text_file(path), path.string());
}

}  // namespace sevridge
