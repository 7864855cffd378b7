#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rydyn/config.hpp"
#include "rydyn/estimation.hpp"

namespace rydyn {

std::string tool_version();

/// Shortest round-trip decimal form; identical input gives identical text.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
};

/// Provenance written at the top of every output file.
struct OutputStamp {
  std::uint64_t seed = 0;
  const RunConfig* config = nullptr;  ///< embedded when set
  std::vector<std::string> notes;     ///< extra "# " lines
};

void ensure_directory(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// "# <tool> <version> seed=<n>", optional notes and config block, then the
/// header row and data rows.
void write_csv(const std::string& path, const CsvTable& table, const OutputStamp& stamp);
std::string csv_text(const CsvTable& table, const OutputStamp& stamp);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// key = value lines after the same stamp.
void write_report(const std::string& path, const KeyValues& entries, const OutputStamp& stamp);
KeyValues read_key_values(const std::string& path);

/// Dataset CSV columns r3_per_s, observable[, sigma]; the sidecar holds the
/// observable tag and the known rates (key = value). Malformed lines raise
/// ConfigError with file and line; unreadable files raise IoError.
ProbeScanDataset read_dataset(const std::string& csv_path, const std::string& sidecar_path);
void write_dataset(const std::string& csv_path, const std::string& sidecar_path, const ProbeScanDataset& d,
                   const OutputStamp& stamp);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<PlotSeries> series;
};

/// Static SVG line chart.
std::string svg_line_plot(const PlotSpec& spec);

}  // namespace rydyn
