#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "rydyn/atomic_data.hpp"
#include "rydyn/config.hpp"
#include "rydyn/io.hpp"
#include "rydyn/kinetics.hpp"
#include "rydyn/reference.hpp"
#include "rydyn/superradiance.hpp"

namespace rydyn {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitSolver = 4,
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Level data named by atomic.data, or the bundled Rb-87 table.
RydbergAtom load_atom(const RunConfig& config);

/// Every model input with "auto" values filled in.
struct ResolvedModel {
  StateLabel state;
  double temperature = kRoomTemperature;
  KineticsParams kinetics;  ///< probe left at 0
  DetectionGeometry detection;
  ExcitationParams excitation;  ///< on resonance
  double peak_rate = 0.0;
  double ionization = 0.0;  ///< Gamma_BBI of the state
  const ReferenceState* reference = nullptr;
  std::vector<std::string> notes;  ///< where each auto value came from
};

/// Reference-table rates are used for the four tabulated states at 300 K;
/// other states take computed A_r, A_BB and Gamma_BBI, with A_s = A_r,
/// gamma = A_BB and Gamma_s = Gamma_BBI. An automatic R2 is the reference peak
/// rate scaled as (n*_28D / n*)^3.
ResolvedModel resolve_model(const RunConfig& config, const RydbergAtom& atom);

struct CascadeRun {
  ResolvedModel model;
  CascadeOptions options;
  CascadeResult result;
};

/// solve_cascade with the cloud, cascade and rate settings of `config`.
CascadeRun run_cascade(const RunConfig& config, const RydbergAtom& atom);

/// What a command wrote, plus headline numbers for logs and tests.
struct CommandResult {
  std::vector<std::string> files;
  KeyValues summary;

  std::string value(const std::string& key) const;  ///< throws DomainError if absent
};

CommandResult cmd_scan(const RunConfig& config);
CommandResult cmd_probe_scan(const RunConfig& config);
CommandResult cmd_cascade(const RunConfig& config);
CommandResult cmd_fit(const RunConfig& config);
CommandResult cmd_tables(const RunConfig& config);
CommandResult cmd_synth(const RunConfig& config);

std::vector<std::string> command_names();

/// Runs one verb, reporting files to `out` and errors to `err`; returns the
/// exit code.
int run_command(const std::string& verb, const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace rydyn
