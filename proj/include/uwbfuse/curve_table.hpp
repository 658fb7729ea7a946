#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace uwbfuse {

/// Inclusive grid start, start + step, ..., stop (each point computed as
/// start + i * step). Throws std::invalid_argument unless step > 0 and
/// stop >= start.
std::vector<double> make_snr_grid(double start_db, double stop_db, double step_db);

/// Default sweep: -30 dB to +5 dB in 0.5 dB steps (71 points).
std::vector<double> default_snr_grid();

double db_to_linear(double db);

/// Named series of values sampled on a strictly increasing SNR grid (dB).
/// Columns keep insertion order for output and are looked up by name.
class CurveTable {
 public:
  struct Column {
    std::string name;
    std::vector<double> values;
    bool operator==(const Column&) const = default;
  };

  CurveTable() = default;
  /// Throws std::invalid_argument unless the grid is non-empty and strictly increasing.
  explicit CurveTable(std::vector<double> snr_grid_db);

  /// Throws std::invalid_argument on a duplicate name or length mismatch.
  void add_column(std::string name, std::vector<double> values);
  void set_metadata(std::string key, std::string value);

  [[nodiscard]] const std::vector<double>& snr_grid_db() const { return grid_; }
  [[nodiscard]] const std::vector<Column>& columns() const { return columns_; }
  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& metadata() const { return metadata_; }
  [[nodiscard]] bool has_column(const std::string& name) const;
  /// Throws std::out_of_range if absent.
  [[nodiscard]] const std::vector<double>& column(const std::string& name) const;
  [[nodiscard]] std::size_t rows() const { return grid_.size(); }

  /// CSV with header "snr_db,<names...>"; SNR at 2 decimals, values at 9 significant digits.
  void write_csv(std::ostream& out) const;
  /// Inverse of write_csv (metadata is not part of the CSV). Throws std::runtime_error on malformed input.
  static CurveTable read_csv(std::istream& in);

 private:
  std::vector<double> grid_;
  std::vector<Column> columns_;
  std::vector<std::pair<std::string, std::string>> metadata_;
};

/// "%.9g" formatting used for probability cells.
std::string format_probability(double value);
/// "%.2f" formatting used for SNR cells.
std::string format_db(double value);

}  // namespace uwbfuse
