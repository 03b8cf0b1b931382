#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sevridge {

// Shortest decimal that parses back to the same double (at most 17
// significant digits).
std::string format_double(double value);

// Always 17 significant digits.
std::string format_double17(double value);

// Whole-token parsers; return false on trailing junk, overflow or empty input.
bool parse_double(std::string_view text, double& out);
bool parse_int64(std::string_view text, long long& out);

std::string read_text_file(const std::filesystem::path& path);

// Writes `<path>.tmp` then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

// Splits one line on ','; no quoting.
std::vector<std::string_view> split_fields(std::string_view line);

// Iterates LF-terminated lines, tolerating a trailing CR and a missing final
// terminator.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line);
  std::size_t line_number() const { return line_number_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_number_ = 0;
};

}  // namespace sevridge
