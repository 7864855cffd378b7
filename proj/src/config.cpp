#include "rydyn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rydyn/errors.hpp"

namespace rydyn {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"run", "seed", "1", "random seed for synthetic data"},
      {"atomic", "state", "28D5/2", "excitation state, nLj"},
      {"atomic", "temperature", "300", "black-body temperature, K"},
      {"atomic", "data", "", "level data file; empty selects the bundled Rb-87 table"},
      {"cloud", "radius", "0.5e-3", "cloud radius, m"},
      {"cloud", "density", "1e13", "Rydberg density for the capture estimate, m^-3"},
      {"excitation", "rabi_red", "0", "lower-leg Rabi frequency, rad/s"},
      {"excitation", "rabi_blue", "0", "upper-leg Rabi frequency, rad/s"},
      {"excitation", "intermediate_detuning", "0", "intermediate-level detuning, rad/s"},
      {"excitation", "linewidth", "5.655e7", "observed two-photon FWHM, rad/s"},
      {"excitation", "peak_rate", "auto", "peak R2, s^-1; auto uses the Rabi frequencies if either is non-zero, else the reference rate"},
      {"excitation", "detuning_span", "2.5e8", "scan half-width, rad/s"},
      {"excitation", "points", "81", "scan points"},
      {"rates", "radiative", "auto", "A_r, s^-1"},
      {"rates", "black_body", "auto", "A_BB, s^-1"},
      {"rates", "other_radiative", "auto", "A_s, s^-1"},
      {"rates", "transfer", "auto", "gamma, s^-1"},
      {"rates", "other_loss", "auto", "Gamma_s, s^-1"},
      {"rates", "direct_loss", "0", "Gamma_r, s^-1"},
      {"mot", "load_rate", "auto", "L, atoms/s; auto is background_loss * ground_atoms0"},
      {"mot", "background_loss", "1", "Gamma_0, s^-1"},
      {"mot", "ground_atoms0", "1e8", "unperturbed MOT population"},
      {"detection", "solid_angle", "3e-3", "collected fraction"},
      {"detection", "efficiency", "0.034", "detector quantum efficiency"},
      {"detection", "branching_rydberg", "0.15", "Rydberg to 6P3/2 branching"},
      {"detection", "branching_6p", "0.31", "6P3/2 to 5S branching"},
      {"probe", "r3_max", "1e6", "largest probe rate R3, s^-1"},
      {"probe", "points", "25", "probe grid points"},
      {"probe", "r3_values", "", "explicit comma-separated R3 grid, overrides r3_max/points"},
      {"dark", "capacity", "0", "dark fraction f_d in [0, 1/3]"},
      {"dark", "exchange_rate", "1e5", "Zeeman exchange rate, s^-1"},
      {"cascade", "n_window", "5", "initial basis half-width in n"},
      {"cascade", "l_max", "4", "largest orbital momentum in the basis"},
      {"cascade", "enlarge", "true", "grow the window until gamma settles"},
      {"cascade", "window_step", "5", "window growth per step"},
      {"cascade", "max_window", "30", "largest window"},
      {"cascade", "window_tolerance", "0.05", "relative gamma change that ends enlargement"},
      {"cascade", "pump", "auto", "pump into the excitation state, s^-1; auto couples to the kinetics"},
      {"cascade", "duration", "2e-4", "time-series length, s"},
      {"cascade", "samples", "200", "time-series samples"},
      {"fit", "dataset", "", "dataset CSV"},
      {"fit", "sidecar", "", "parameter sidecar; empty uses <dataset>.meta"},
      {"fit", "mode", "standard", "standard, combined or dark"},
      {"synth", "observable", "loss", "loss or counts"},
      {"synth", "noise", "none", "none, gaussian or poisson"},
      {"synth", "relative_sigma", "0.05", "gaussian relative noise"},
      {"synth", "exposure", "1", "poisson counting time per point, s"},
      {"output", "directory", "out", "output directory"},
      {"output", "plot", "false", "also write SVG plots"},
  };
  return schema;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const ConfigKey* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : config_schema())
    if (k.section == section && k.name == name) return &k;
  return nullptr;
}

bool known_section(const std::string& section) {
  const auto& s = config_schema();
  return std::any_of(s.begin(), s.end(), [&](const ConfigKey& k) { return k.section == section; });
}

double to_double(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end) throw ConfigError(where + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_schema()) {
    values_[k.section][k.name] = k.default_value;
    explicit_[k.section][k.name] = false;
  }
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = origin + ":" + std::to_string(number);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!known_section(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside any section");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (find_key(section, key) == nullptr)
      throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    if (cfg.explicit_[section][key]) throw ConfigError(where + ": duplicate key '" + section + "." + key + "'");
    cfg.values_[section][key] = value;
    cfg.explicit_[section][key] = true;
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find(kConfigBegin) == std::string::npos) return parse(text, path);
  return parse(extract_embedded_config(text), path + " (embedded)");
}

std::string extract_embedded_config(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  bool inside = false;
  bool found = false;
  while (std::getline(in, line)) {
    if (line == kConfigBegin) {
      inside = true;
      found = true;
      continue;
    }
    if (line == kConfigEnd) break;
    if (!inside) continue;
    if (line.rfind("# ", 0) == 0)
      out << line.substr(2) << '\n';
    else if (line == "#")
      out << '\n';
    else
      break;
  }
  if (!found) throw ConfigError("no embedded configuration block");
  return out.str();
}

const std::string& RunConfig::get(const std::string& section, const std::string& key) const {
  if (find_key(section, key) == nullptr) throw ConfigError("unknown config key " + section + "." + key);
  return values_.at(section).at(key);
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  if (find_key(section, key) == nullptr) throw ConfigError("unknown config key " + section + "." + key);
  values_[section][key] = value;
  explicit_[section][key] = true;
}

bool RunConfig::is_default(const std::string& section, const std::string& key) const {
  get(section, key);
  return !explicit_.at(section).at(key);
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
  return to_double(get(section, key), section + "." + key);
}

std::optional<double> RunConfig::get_optional(const std::string& section, const std::string& key) const {
  const auto& v = get(section, key);
  if (v == "auto") return std::nullopt;
  return to_double(v, section + "." + key);
}

int RunConfig::get_int(const std::string& section, const std::string& key) const {
  const double v = get_double(section, key);
  if (v != static_cast<double>(static_cast<long long>(v)) || std::abs(v) > 2e9)
    throw ConfigError(section + "." + key + ": '" + get(section, key) + "' is not an integer");
  return static_cast<int>(v);
}

bool RunConfig::get_bool(const std::string& section, const std::string& key) const {
  std::string v = get(section, key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(section + "." + key + ": '" + get(section, key) + "' is not a boolean");
}

std::vector<double> RunConfig::get_list(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  std::istringstream in(get(section, key));
  std::string item;
  while (std::getline(in, item, ','))
    if (!trim(item).empty()) out.push_back(to_double(item, section + "." + key));
  return out;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  std::string section;
  for (const auto& k : config_schema()) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.name << " = " << values_.at(k.section).at(k.name) << '\n';
  }
  return out.str();
}

std::string RunConfig::to_comment_block() const {
  std::istringstream in(to_text());
  std::ostringstream out;
  out << kConfigBegin << '\n';
  std::string line;
  while (std::getline(in, line)) out << (line.empty() ? "#" : "# " + line) << '\n';
  out << kConfigEnd << '\n';
  return out.str();
}

}  // namespace rydyn
