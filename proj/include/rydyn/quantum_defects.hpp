#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rydyn {

/// Quantum numbers of a fine-structure level; j is stored doubled.
struct StateLabel {
  int n = 0;
  int l = 0;
  int two_j = 1;

  friend bool operator==(const StateLabel&, const StateLabel&) = default;
  friend auto operator<=>(const StateLabel&, const StateLabel&) = default;
};

/// Parses "28D5/2", "30S1/2", "28D" (j defaults to l + 1/2) and "S1/2"-style
/// series tags (n = 0). Throws ConfigError on malformed input.
StateLabel parse_state_label(std::string_view text);
std::string format_state_label(const StateLabel& state);
char orbital_letter(int l);

/// delta(n) = delta0 + delta2 / (n - delta0)^2 for one (l, j) series.
struct QuantumDefect {
  double delta0 = 0.0;
  double delta2 = 0.0;
  int min_n = 1;  ///< lowest physical n of the series
  std::string source;
};

class QuantumDefectTable {
 public:
  void set(int l, int two_j, QuantumDefect defect);

  /// Defect of the (n, l, j) level; 0 for series absent from the table.
  double defect(int n, int l, int two_j) const;
  /// Lowest n of the series; l + 1 for series absent from the table.
  int min_n(int l, int two_j) const;
  const QuantumDefect* find(int l, int two_j) const;
  const std::map<std::pair<int, int>, QuantumDefect>& entries() const { return entries_; }

 private:
  std::map<std::pair<int, int>, QuantumDefect> entries_;
};

/// Tabulated black-body ionisation rate of one level at one temperature.
struct IonizationEntry {
  StateLabel state;
  double rate = 0.0;         ///< s^-1
  double temperature = 0.0;  ///< K
  std::string source;
};

/// Everything species-specific: defects, core size, mass, ionisation table.
struct AtomData {
  std::string name;
  double mass = 0.0;         ///< kg
  double core_radius = 0.0;  ///< a0; inner cutoff for radial integration
  QuantumDefectTable defects;
  std::vector<IonizationEntry> ionization;

  /// All defects zero, no core: exactly hydrogenic (infinite nuclear mass).
  static AtomData hydrogen();
  /// Parses the plain-text atomic data format (see data/README.md).
  static AtomData load(const std::filesystem::path& path);
  static AtomData parse(std::string_view text, const std::string& origin = "<memory>");
};

/// Location of the bundled Rb-87 data file; honours $RYDYN_DATA_DIR.
std::filesystem::path default_data_path();

}  // namespace rydyn
