#include "uwbfuse/curve_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace uwbfuse {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("curve table: not a number: '" + text + "'");
  }
  if (used != text.size()) throw std::runtime_error("curve table: trailing characters in '" + text + "'");
  return value;
}

}  // namespace

std::vector<double> make_snr_grid(double start_db, double stop_db, double step_db) {
  if (!(step_db > 0.0) || !(stop_db >= start_db) || !std::isfinite(start_db) || !std::isfinite(stop_db)) {
    throw std::invalid_argument("snr grid: need step > 0 and stop >= start");
  }
  const auto count = static_cast<std::size_t>(std::floor((stop_db - start_db) / step_db + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = start_db + static_cast<double>(i) * step_db;
  return grid;
}

std::vector<double> default_snr_grid() { return make_snr_grid(-30.0, 5.0, 0.5); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string format_probability(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string format_db(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

CurveTable::CurveTable(std::vector<double> snr_grid_db) : grid_(std::move(snr_grid_db)) {
  if (grid_.empty()) throw std::invalid_argument("curve table: empty SNR grid");
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("curve table: SNR grid must be strictly increasing");
  }
}

void CurveTable::add_column(std::string name, std::vector<double> values) {
  if (values.size() != grid_.size()) {
    throw std::invalid_argument("curve table: column '" + name + "' length does not match the grid");
  }
  if (has_column(name)) throw std::invalid_argument("curve table: duplicate column '" + name + "'");
  columns_.push_back(Column{std::move(name), std::move(values)});
}

void CurveTable::set_metadata(std::string key, std::string value) {
  for (auto& [k, v] : metadata_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata_.emplace_back(std::move(key), std::move(value));
}

bool CurveTable::has_column(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(), [&](const Column& c) { return c.name == name; });
}

const std::vector<double>& CurveTable::column(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return c.values;
  }
  throw std::out_of_range("curve table: no column '" + name + "'");
}

void CurveTable::write_csv(std::ostream& out) const {
  out << "snr_db";
  for (const auto& c : columns_) out << ',' << c.name;
  out << '\n';
  for (std::size_t row = 0; row < grid_.size(); ++row) {
    out << format_db(grid_[row]);
    for (const auto& c : columns_) out << ',' << format_probability(c.values[row]);
    out << '\n';
  }
}

CurveTable CurveTable::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("curve table: missing header");
  const auto header = split_csv_line(line);
  if (header.empty() || header.front() != "snr_db") {
    throw std::runtime_error("curve table: header must start with snr_db");
  }
  std::vector<double> grid;
  std::vector<std::vector<double>> values(header.size() - 1);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw std::runtime_error("curve table: ragged row: " + line);
    grid.push_back(parse_number(fields[0]));
    for (std::size_t c = 1; c < fields.size(); ++c) values[c - 1].push_back(parse_number(fields[c]));
  }
  CurveTable table(std::move(grid));
  for (std::size_t c = 1; c < header.size(); ++c) table.add_column(header[c], std::move(values[c - 1]));
  return table;
}

}  // namespace uwbfuse
