#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tkrr::csv {

/// Ordered key/value pairs emitted as `# key=value` lines above the data.
using Metadata = std::vector<std::pair<std::string, std::string>>;

/// `%.17g` formatting: 17 significant digits, round-trips every double.
std::string format_double(double value);

/// Joins already formatted cells with commas.
std::string join(const std::vector<std::string>& cells);

/// Writes `content` to `path` via a temporary sibling file and a rename, so a
/// reader never observes a half-written file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Builds the text of a CSV document: metadata block, optional header row,
/// data rows. LF line endings throughout.
class Document {
 public:
  void add_metadata(std::string key, std::string value);
  void add_metadata(const Metadata& entries);
  void set_header(std::vector<std::string> columns);
  void add_row(std::vector<std::string> cells);
  void add_numeric_row(const std::vector<double>& values);

  [[nodiscard]] std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  Metadata metadata_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV file: `#` lines go to metadata (split at the first '='), all
/// other non-empty lines are split on commas.
struct Table {
  Metadata metadata;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] const std::string* find_metadata(std::string_view key) const;
};

Table read(const std::filesystem::path& path);

/// Strict conversion of one cell; throws IoError naming the cell on failure.
double parse_double(std::string_view cell);
std::size_t parse_index(std::string_view cell);

}  // namespace tkrr::csv
