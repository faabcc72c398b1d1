#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "gravbath/cli.hpp"

namespace gravbath::cli {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string render(const Cell& cell, Format format) {
  if (const auto* d = std::get_if<double>(&cell)) {
    if (format == Format::jsonl && !std::isfinite(*d)) return "null";
    return format_number(*d);
  }
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  const auto& s = std::get<std::string>(cell);
  return format == Format::csv ? csv_field(s) : nlohmann::json(s).dump();
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

void emit_table(const Table& table, Format format, const std::filesystem::path& path) {
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::invalid_argument("emit_table: row width differs from header");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("emit_table: cannot write " + path.string());
  if (format == Format::csv) {
    for (std::size_t k = 0; k < table.columns.size(); ++k) out << (k ? "," : "") << csv_field(table.columns[k]);
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << render(row[k], format);
      out << "\n";
    }
  } else {
    for (const auto& row : table.rows) {
      out << "{";
      for (std::size_t k = 0; k < row.size(); ++k) {
        out << (k ? "," : "") << nlohmann::json(table.columns[k]).dump() << ":" << render(row[k], format);
      }
      out << "}\n";
    }
  }
  if (!out) throw std::runtime_error("emit_table: write failed for " + path.string());
}

}  // namespace gravbath::cli
