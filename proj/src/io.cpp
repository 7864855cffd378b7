#include "rydyn/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rydyn/errors.hpp"

namespace rydyn {

std::string tool_version() { return "rydyn 0.3.0"; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(format_number(v));
  rows.push_back(std::move(row));
}

void ensure_directory(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec || !std::filesystem::is_directory(path))
    throw IoError("cannot create output directory '" + path + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

std::string stamp_text(const OutputStamp& stamp) {
  std::ostringstream out;
  out << "# " << tool_version() << " seed=" << stamp.seed << '\n';
  for (const auto& n : stamp.notes) out << "# " << n << '\n';
  if (stamp.config != nullptr) out << stamp.config->to_comment_block();
  return out.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ConfigError(where + ": '" + text + "' is not a number");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string csv_text(const CsvTable& table, const OutputStamp& stamp) {
  std::ostringstream out;
  out << stamp_text(stamp);
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

void write_csv(const std::string& path, const CsvTable& table, const OutputStamp& stamp) {
  write_text_file(path, csv_text(table, stamp));
}

void write_report(const std::string& path, const KeyValues& entries, const OutputStamp& stamp) {
  std::ostringstream out;
  out << stamp_text(stamp);
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  write_text_file(path, out.str());
}

KeyValues read_key_values(const std::string& path) {
  std::istringstream in(read_file(path));
  KeyValues out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(number) + ": expected key = value");
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

ProbeScanDataset read_dataset(const std::string& csv_path, const std::string& sidecar_path) {
  ProbeScanDataset d;
  std::map<std::string, double*> numeric = {
      {"excitation", &d.known.excitation},
      {"radiative", &d.known.radiative},
      {"other_radiative", &d.known.other_radiative},
      {"direct_loss", &d.known.direct_loss},
      {"dark_exchange_rate", &d.known.dark.exchange_rate},
      {"solid_angle", &d.geometry.solid_angle},
      {"efficiency", &d.geometry.efficiency},
      {"branching_rydberg", &d.geometry.branching_rydberg},
      {"branching_6p", &d.geometry.branching_6p},
  };
  bool tagged = false;
  for (const auto& [key, value] : read_key_values(sidecar_path)) {
    const std::string where = sidecar_path + ": " + key;
    if (key == "observable") {
      try {
        d.observable = parse_observable(value);
      } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
      }
      tagged = true;
    } else if (auto it = numeric.find(key); it != numeric.end()) {
      *it->second = parse_number(value, where);
    } else {
      throw ConfigError(sidecar_path + ": unknown key '" + key + "'");
    }
  }
  if (!tagged) throw ConfigError(sidecar_path + ": missing observable tag");

  std::istringstream in(read_file(csv_path));
  std::string line;
  int number = 0;
  int r3_col = -1, value_col = -1, sigma_col = -1;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = csv_path + ":" + std::to_string(number);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split(t, ',');
    if (r3_col < 0) {
      columns = cells.size();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "r3_per_s") r3_col = static_cast<int>(i);
        else if (cells[i] == "observable") value_col = static_cast<int>(i);
        else if (cells[i] == "sigma") sigma_col = static_cast<int>(i);
        else throw ConfigError(where + ": unknown column '" + cells[i] + "'");
      }
      if (r3_col < 0 || value_col < 0) throw ConfigError(where + ": header needs r3_per_s and observable");
      continue;
    }
    if (cells.size() != columns)
      throw ConfigError(where + ": expected " + std::to_string(columns) + " fields, found " +
                        std::to_string(cells.size()));
    ProbeSample s;
    s.r3 = parse_number(cells[static_cast<std::size_t>(r3_col)], where);
    s.value = parse_number(cells[static_cast<std::size_t>(value_col)], where);
    s.sigma = sigma_col >= 0 ? parse_number(cells[static_cast<std::size_t>(sigma_col)], where) : 1.0;
    d.samples.push_back(s);
  }
  if (r3_col < 0) throw ConfigError(csv_path + ": no header row");
  d.has_sigma = sigma_col >= 0;
  try {
    d.validate();
  } catch (const DomainError& e) {
    throw ConfigError(csv_path + ": " + e.what());
  }
  return d;
}

void write_dataset(const std::string& csv_path, const std::string& sidecar_path, const ProbeScanDataset& d,
                   const OutputStamp& stamp) {
  CsvTable table;
  table.header = {"r3_per_s", "observable"};
  if (d.has_sigma) table.header.push_back("sigma");
  for (const auto& s : d.samples) {
    if (d.has_sigma)
      table.add_row({s.r3, s.value, s.sigma});
    else
      table.add_row({s.r3, s.value});
  }
  write_csv(csv_path, table, stamp);
  const KeyValues meta = {
      {"observable", to_string(d.observable)},
      {"excitation", format_number(d.known.excitation)},
      {"radiative", format_number(d.known.radiative)},
      {"other_radiative", format_number(d.known.other_radiative)},
      {"direct_loss", format_number(d.known.direct_loss)},
      {"dark_exchange_rate", format_number(d.known.dark.exchange_rate)},
      {"solid_angle", format_number(d.geometry.solid_angle)},
      {"efficiency", format_number(d.geometry.efficiency)},
      {"branching_rydberg", format_number(d.geometry.branching_rydberg)},
      {"branching_6p", format_number(d.geometry.branching_6p)},
  };
  OutputStamp bare = stamp;
  bare.config = nullptr;
  write_report(sidecar_path, meta, bare);
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << v;
  return out.str();
}

std::string tick_label(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

}  // namespace

std::string svg_line_plot(const PlotSpec& spec) {
  constexpr double width = 640, height = 420, left = 80, right = 160, top = 40, bottom = 60;
  constexpr std::array<const char*, 6> colours = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0.0)) continue;
      if (!std::isfinite(s.y[i])) continue;
      x_lo = std::min(x_lo, tx(s.x[i]));
      x_hi = std::max(x_hi, tx(s.x[i]));
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  y_lo = std::min(y_lo, 0.0);
  if (y_hi == y_lo) y_hi = y_lo + 1;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (tx(x) - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(spec.title) << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_lo + (x_hi - x_lo) * i / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * i / 4.0;
    const double gx = left + pw * i / 4.0, gy = top + ph * (1.0 - i / 4.0);
    out << "<text x=\"" << fixed(gx) << "\" y=\"" << fixed(top + ph + 18) << "\" text-anchor=\"middle\">"
        << tick_label(spec.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    out << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(gy + 4) << "\" text-anchor=\"end\">"
        << tick_label(fy) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
      << escape_xml(spec.x_label) << "</text>\n";
  out << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(spec.y_label) << "</text>\n";
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* colour = colours[k % colours.size()];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0.0)) continue;
      if (!std::isfinite(s.y[i])) continue;
      out << (first ? "" : " ") << fixed(px(s.x[i])) << ',' << fixed(py(s.y[i]));
      first = false;
    }
    out << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(k) + 8.0;
    out << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - right + 30
        << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << width - right + 35 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.name)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace rydyn
