#include "rydyn/quantum_defects.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rydyn/constants.hpp"
#include "rydyn/errors.hpp"

#ifndef RYDYN_DATA_DIR
#define RYDYN_DATA_DIR "data"
#endif

namespace rydyn {
namespace {

constexpr std::string_view kLetters = "SPDFGHIKLMNOQRTUV";

int letter_to_l(char c) {
  const auto pos = kLetters.find(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (pos == std::string_view::npos) return -1;
  return static_cast<int>(pos);
}

double parse_double(const std::string& token, const std::string& where) {
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw ConfigError(where + ": not a number: '" + token + "'");
  return value;
}

}  // namespace

char orbital_letter(int l) {
  if (l < 0 || l >= static_cast<int>(kLetters.size())) return '?';
  return kLetters[static_cast<std::size_t>(l)];
}

StateLabel parse_state_label(std::string_view text) {
  StateLabel out;
  std::size_t i = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i > 0) std::from_chars(text.data(), text.data() + i, out.n);
  if (i >= text.size()) throw ConfigError("state label '" + std::string(text) + "' lacks an orbital letter");
  out.l = letter_to_l(text[i]);
  if (out.l < 0) throw ConfigError("state label '" + std::string(text) + "' has unknown orbital letter");
  ++i;
  if (i == text.size()) {
    out.two_j = out.l == 0 ? 1 : 2 * out.l + 1;
    return out;
  }
  const auto rest = text.substr(i);
  const auto slash = rest.find('/');
  int numerator = 0;
  if (slash == std::string_view::npos || rest.substr(slash + 1) != "2" ||
      std::from_chars(rest.data(), rest.data() + slash, numerator).ec != std::errc{})
    throw ConfigError("state label '" + std::string(text) + "' has malformed j (expected e.g. 5/2)");
  if (numerator != 2 * out.l + 1 && numerator != 2 * out.l - 1)
    throw ConfigError("state label '" + std::string(text) + "': j incompatible with l");
  out.two_j = numerator;
  return out;
}

std::string format_state_label(const StateLabel& s) {
  std::ostringstream os;
  if (s.n > 0) os << s.n;
  os << orbital_letter(s.l) << s.two_j << "/2";
  return os.str();
}

void QuantumDefectTable::set(int l, int two_j, QuantumDefect defect) {
  entries_[{l, two_j}] = std::move(defect);
}

const QuantumDefect* QuantumDefectTable::find(int l, int two_j) const {
  const auto it = entries_.find({l, two_j});
  return it == entries_.end() ? nullptr : &it->second;
}

double QuantumDefectTable::defect(int n, int l, int two_j) const {
  const auto* d = find(l, two_j);
  if (d == nullptr) return 0.0;
  const double shifted = n - d->delta0;
  return d->delta0 + d->delta2 / (shifted * shifted);
}

int QuantumDefectTable::min_n(int l, int two_j) const {
  const auto* d = find(l, two_j);
  return d == nullptr ? l + 1 : std::max(d->min_n, l + 1);
}

AtomData AtomData::hydrogen() {
  AtomData h;
  h.name = "H";
  h.mass = 1.00782503207 * constants::atomic_mass_unit;
  h.core_radius = 0.0;
  return h;
}

AtomData AtomData::parse(std::string_view text, const std::string& origin) {
  AtomData data;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto& kind = tok[0];
    if (kind == "atom" && tok.size() == 2) {
      data.name = tok[1];
    } else if (kind == "mass_u" && tok.size() >= 2) {
      data.mass = parse_double(tok[1], where) * constants::atomic_mass_unit;
    } else if (kind == "core_radius_a0" && tok.size() >= 2) {
      data.core_radius = parse_double(tok[1], where);
    } else if (kind == "defect" && tok.size() >= 5) {
      const auto series = parse_state_label(tok[1]);
      if (series.n != 0) throw ConfigError(where + ": defect series must not carry n");
      QuantumDefect d;
      d.delta0 = parse_double(tok[2], where);
      d.delta2 = parse_double(tok[3], where);
      d.min_n = static_cast<int>(parse_double(tok[4], where));
      d.source = tok.size() >= 6 ? tok[5] : "";
      data.defects.set(series.l, series.two_j, d);
    } else if (kind == "bbi" && tok.size() >= 4) {
      IonizationEntry e;
      e.state = parse_state_label(tok[1]);
      if (e.state.n == 0) throw ConfigError(where + ": bbi entry needs a principal quantum number");
      e.rate = parse_double(tok[2], where);
      e.temperature = parse_double(tok[3], where);
      e.source = tok.size() >= 5 ? tok[4] : "";
      data.ionization.push_back(e);
    } else {
      throw ConfigError(where + ": unrecognised record '" + line + "'");
    }
  }
  if (data.name.empty()) throw ConfigError(origin + ": missing 'atom' record");
  return data;
}

AtomData AtomData::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open atomic data file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::filesystem::path default_data_path() {
  if (const char* dir = std::getenv("RYDYN_DATA_DIR"); dir != nullptr && *dir != '\0')
    return std::filesystem::path(dir) / "rb87.dat";
  return std::filesystem::path(RYDYN_DATA_DIR) / "rb87.dat";
}

}  // namespace rydyn
