#include "tkrr/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "tkrr/errors.hpp"

namespace tkrr::csv {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  if (ec != std::errc{}) throw IoError("failed to format floating-point value");
  return std::string(buf.data(), end);
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += cells[i];
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void Document::add_metadata(std::string key, std::string value) {
  metadata_.emplace_back(std::move(key), std::move(value));
}

void Document::add_metadata(const Metadata& entries) {
  metadata_.insert(metadata_.end(), entries.begin(), entries.end());
}

void Document::set_header(std::vector<std::string> columns) { header_ = std::move(columns); }

void Document::add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

void Document::add_numeric_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (const double v : values) cells.push_back(format_double(v));
  rows_.push_back(std::move(cells));
}

std::string Document::str() const {
  std::string out;
  for (const auto& [key, value] : metadata_) {
    out += "# ";
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  if (!header_.empty()) {
    out += join(header_);
    out += '\n';
  }
  for (const auto& row : rows_) {
    out += join(row);
    out += '\n';
  }
  return out;
}

void Document::write(const std::filesystem::path& path) const { write_atomic(path, str()); }

const std::string* Table::find_metadata(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  Table table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body.front() == ' ') body.erase(0, 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        table.metadata.emplace_back(body, "");
      } else {
        table.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    table.rows.push_back(std::move(cells));
  }
  return table;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_double(std::string_view cell) {
  const auto s = trim(cell);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw IoError("not a number: '" + std::string(cell) + "'");
  }
  return value;
}

std::size_t parse_index(std::string_view cell) {
  const auto s = trim(cell);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw IoError("not an index: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace tkrr::csv
