#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rydyn {

inline constexpr const char* kConfigBegin = "# --- resolved config ---";
inline constexpr const char* kConfigEnd = "# --- end config ---";

/// One documented key of the configuration schema.
struct ConfigKey {
  std::string section;
  std::string name;
  std::string default_value;
  std::string doc;  ///< units and meaning
};

/// The full set of accepted sections and keys with their defaults.
const std::vector<ConfigKey>& config_schema();

/// Sectioned key = value text. Lines starting with '#' or ';' are comments.
/// Unknown sections or keys, duplicates and malformed lines raise ConfigError
/// naming the line. Every schema key is present after parsing (defaults fill
/// the gaps), so the resolved form is complete.
class RunConfig {
 public:
  RunConfig();  ///< all defaults

  static RunConfig parse(const std::string& text, const std::string& origin = "<config>");
  /// Reads a config file, or the embedded block of a file written by the tool.
  static RunConfig load(const std::string& path);

  const std::string& get(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  bool is_default(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key) const;
  /// "auto" yields nullopt.
  std::optional<double> get_optional(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  /// Resolved configuration as parseable text, sections and keys in schema order.
  std::string to_text() const;
  /// Same text with every line prefixed by "# ", between kConfigBegin and
  /// kConfigEnd marker lines.
  std::string to_comment_block() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  std::map<std::string, std::map<std::string, bool>> explicit_;
};

/// The config text between the marker lines of an output file.
std::string extract_embedded_config(const std::string& text);

}  // namespace rydyn
