#pragma once

#include <string>
#include <vector>

#include "rydyn/quantum_defects.hpp"
#include "rydyn/radial.hpp"

namespace rydyn {

/// Default temperature for every black-body quantity, K.
inline constexpr double kRoomTemperature = 300.0;

struct RydbergLevel {
  StateLabel state;
  double n_star = 0.0;
  double energy = 0.0;  ///< J, negative (bound)

  int n() const { return state.n; }
  int l() const { return state.l; }
  int two_j() const { return state.two_j; }
  double j() const { return 0.5 * state.two_j; }
  int degeneracy() const { return state.two_j + 1; }
  std::string label() const { return format_state_label(state); }
};

/// Electric-dipole transition between two fine-structure levels.
struct Transition {
  RydbergLevel upper;
  RydbergLevel lower;
  double omega = 0.0;                ///< rad/s
  double wavelength = 0.0;           ///< m
  double radial_integral = 0.0;      ///< <upper| r |lower>, a0
  double line_strength = 0.0;        ///< |<upper||r||lower>|^2, a0^2
  double oscillator_strength = 0.0;  ///< absorption f, lower -> upper
  double einstein_a = 0.0;           ///< spontaneous emission rate, s^-1
  double temperature = 0.0;          ///< K
  double occupation = 0.0;           ///< photon occupation at omega, T

  double wavenumber() const;
  /// Stimulated emission per upper-state atom, s^-1.
  double stimulated_emission_rate() const { return einstein_a * occupation; }
  /// Black-body absorption per lower-state atom, s^-1.
  double absorption_rate() const;
};

struct LevelRates {
  double spontaneous = 0.0;            ///< A_r: decay into the terminal (n <= terminal_n) set
  double spontaneous_rydberg = 0.0;    ///< spontaneous decay into lower non-terminal levels
  double black_body_transfer = 0.0;    ///< A_BB
  double black_body_ionization = 0.0;  ///< Gamma_BBI
  double temperature = 0.0;
  int window = 0;  ///< |n' - n| window at which A_BB converged
};

struct LevelRatesOptions {
  int window = 15;
  int window_step = 5;
  int max_window = 60;
  double tolerance = 0.01;  ///< relative change of A_BB between windows
  bool enlarge = true;      ///< false: only check window vs window + step
  int terminal_n = 12;
};

/// Bose-Einstein occupation 1 / (exp(hbar omega / k T) - 1); 0 at T = 0.
double photon_occupation(double omega, double temperature);

/// |dl| = 1 and |dj| <= 1.
bool dipole_allowed(const StateLabel& a, const StateLabel& b);

/// Emission rate from the absorption oscillator strength,
/// A = (2 e^2 omega^2 / m_e c^3) (g_lower / g_upper) f.
double einstein_a_from_oscillator(double omega, double oscillator_strength, int g_lower, int g_upper);

/// Emission rate straight from the line strength (a0^2),
/// A = 4 omega^3 e^2 a0^2 S / (3 hbar c^3 g_upper).
double einstein_a_from_line_strength(double omega, double line_strength, int g_upper);

/// Quantum-defect atom: level energies, transitions, radiative rates.
///
/// Immutable after construction; every member is safe to call concurrently.
class RydbergAtom {
 public:
  explicit RydbergAtom(AtomData data, NumerovOptions numerov = {});

  /// Loads the bundled Rb-87 data file.
  static RydbergAtom rubidium87();
  static RydbergAtom hydrogen();

  const AtomData& data() const { return data_; }
  const NumerovOptions& numerov() const { return numerov_; }

  RydbergLevel level_energy(int n, int l, int two_j) const;
  RydbergLevel level(const StateLabel& state) const { return level_energy(state.n, state.l, state.two_j); }
  bool valid_state(const StateLabel& state) const;

  RadialWavefunction wavefunction(const RydbergLevel& level) const;

  Transition transition(const RydbergLevel& upper, const RydbergLevel& lower,
                        double temperature = kRoomTemperature) const;
  /// Same, reusing precomputed wavefunctions of the two levels.
  Transition transition(const RydbergLevel& upper, const RydbergLevel& lower, double temperature,
                        const RadialWavefunction& upper_wf, const RadialWavefunction& lower_wf) const;

  /// All dipole-allowed partners with n in [n_lo, n_hi], excluding degenerate ones.
  std::vector<RydbergLevel> dipole_partners(const RydbergLevel& level, int n_lo, int n_hi) const;

  /// A_r, A_BB (window-converged) and Gamma_BBI. OpenMP over partner levels.
  LevelRates level_rates(const RydbergLevel& level, double temperature = kRoomTemperature,
                         const LevelRatesOptions& options = {}) const;
  /// Serial reference for level_rates; identical results.
  LevelRates level_rates_serial(const RydbergLevel& level, double temperature = kRoomTemperature,
                                const LevelRatesOptions& options = {}) const;

  /// Tabulated value for listed states at their tabulated temperature; other
  /// states are scaled from the nearest tabulated state (same l preferred) as
  /// (n*_ref / n*)^2, with temperature dependence from a Kramers-like
  /// cross-section, integral over the Planck spectrum above threshold of
  /// n(omega) / omega. Approximate away from the tabulated states.
  double black_body_ionization(const RydbergLevel& level, double temperature = kRoomTemperature) const;

 private:
  LevelRates level_rates_impl(const RydbergLevel& level, double temperature,
                              const LevelRatesOptions& options, bool parallel) const;

  AtomData data_;
  NumerovOptions numerov_;
};

}  // namespace rydyn
