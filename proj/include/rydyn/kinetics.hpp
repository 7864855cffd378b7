#pragma once

#include <span>
#include <vector>

#include "rydyn/stiff_ode.hpp"

namespace rydyn {

/// Two-photon excitation through an off-resonant intermediate level. All
/// frequencies are angular (rad/s).
struct ExcitationParams {
  double rabi_red = 0.0;               ///< epsilon_r, lower-leg Rabi frequency
  double rabi_blue = 0.0;              ///< epsilon_b, upper-leg Rabi frequency
  double intermediate_detuning = 0.0;  ///< delta_i, must be non-zero
  double linewidth = 0.0;              ///< observed FWHM Delta, > 0
  double detuning = 0.0;               ///< nu - nu0

  double two_photon_rabi() const { return rabi_red * rabi_blue / (4.0 * intermediate_detuning); }
  double peak_rate() const;
  void validate() const;
};

/// Unit-peak Lorentzian of FWHM `fwhm` evaluated at `detuning`.
double lorentzian_profile(double detuning, double fwhm);

/// R2 = (|eps2|^2 / Delta) L(nu - nu0; Delta).
double two_photon_rate(const ExcitationParams& p);

/// Rydberg population that the probe cannot address (Zeeman-precessed
/// sublevels). Excitation is split between the compartments in proportion to
/// the capacity, and the two exchange with forward rate kappa f_d and return
/// rate kappa (1 - f_d), so f_d is also the equilibrium dark share.
struct DarkCompartment {
  double capacity = 0.0;       ///< f_d in [0, 1/3]
  double exchange_rate = 0.0;  ///< kappa_Z, s^-1
  bool enabled() const { return capacity > 0.0; }
};

/// Rates of the three-state (ground, excitation Rydberg, other Rydberg)
/// model. All in s^-1 except the load rate (atoms/s).
struct KineticsParams {
  double excitation = 0.0;         ///< R2, per ground atom
  double probe = 0.0;              ///< R3, stimulated emission to 6P3/2
  double radiative = 0.0;          ///< A_r, spontaneous decay to low-lying states
  double other_radiative = 0.0;    ///< A_s, mean decay of the other Rydberg states
  double transfer = 0.0;           ///< gamma, Rydberg-Rydberg transfer
  double direct_loss = 0.0;        ///< Gamma_r, trap loss from the excitation state
  double other_loss = 0.0;         ///< Gamma_s, trap loss from the other states
  double load_rate = 0.0;          ///< L
  double background_loss = 0.0;    ///< Gamma_0
  double black_body = 0.0;         ///< A_BB, used only by the cascade count estimate
  DarkCompartment dark;

  void validate() const;
};

struct SteadyState {
  double ground = 0.0;
  double rydberg_addressable = 0.0;
  double rydberg_dark = 0.0;
  double other = 0.0;

  double rydberg() const { return rydberg_addressable + rydberg_dark; }
};

struct DetectionGeometry {
  double solid_angle = 3e-3;     ///< Omega, collected fraction
  double efficiency = 0.034;     ///< detector quantum efficiency
  double branching_rydberg = 0.15;  ///< b_r, Rydberg -> 6P3/2 fluorescence branching
  double branching_6p = 0.31;       ///< b_6, 6P3/2 -> 5S branching

  double product() const { return solid_angle * efficiency * branching_rydberg * branching_6p; }
  void validate() const;
};

SteadyState steady_state(const KineticsParams& p);

/// Added trap-loss rate Gamma. Without a dark compartment this is the
/// approximate closed form R2 (gamma Gamma_s / A_s + Gamma_r) / (A_r + R3 + gamma);
/// with one it is the exact extended-model value.
double trap_loss_increase(const KineticsParams& p);

/// Exact steady-state loss (Gamma_r N_r + Gamma_s N_s) / N_g. Independent of N_g.
double trap_loss_exact(const KineticsParams& p);

/// Exact R3 -> infinity limit of the trap loss. Zero without a dark compartment.
double trap_loss_high_probe_limit(const KineticsParams& p);

/// Probe-induced 420 nm count rate per ground atom. Without a dark
/// compartment: R3 R2 Omega eta b_r b_6 / (A_r + R3 + gamma).
double probe_count_rate(const KineticsParams& p, const DetectionGeometry& g);
double probe_count_rate_exact(const KineticsParams& p, const DetectionGeometry& g);

/// Cascade 420 nm count rate R2 N_g b_r b_6 eta Omega A_r / (A_r + A_BB).
/// Substituting gamma for A_BB gives the model-consistent prediction.
double cascade_count_rate(const KineticsParams& p, const DetectionGeometry& g, double ground_atoms);

/// Gamma_1 = Gamma_0 (N_g0 / N_g - 1).
double loss_from_fluorescence(double unexcited_atoms, double excited_atoms, double background_loss);

struct KineticsTrajectory {
  std::vector<double> times;
  std::vector<SteadyState> states;
};

/// Integrates the rate equations from `initial` over [0, duration], sampled
/// at `samples` evenly spaced times (plus t = 0).
KineticsTrajectory transient(const KineticsParams& p, const SteadyState& initial, double duration,
                             int samples = 100, const StiffOptions& options = {});
KineticsTrajectory transient(const KineticsParams& p, const SteadyState& initial,
                             std::span<const double> times, const StiffOptions& options = {});

/// Slowest relaxation rate (smallest |eigenvalue|) of the linear system.
double slowest_relaxation_rate(const KineticsParams& p);

struct ScanPoint {
  double detuning = 0.0;      ///< rad/s
  double excitation = 0.0;    ///< R2 at this detuning
  double loss = 0.0;          ///< trap_loss_increase
  double ground = 0.0;        ///< steady-state N_g
  double cascade_counts = 0.0;
};

/// Sweeps the two-photon detuning; p.excitation is replaced by R2(detuning).
/// OpenMP over grid points.
std::vector<ScanPoint> scan(const KineticsParams& p, const ExcitationParams& excitation,
                            const DetectionGeometry& g, std::span<const double> detunings);
std::vector<ScanPoint> scan_serial(const KineticsParams& p, const ExcitationParams& excitation,
                                   const DetectionGeometry& g, std::span<const double> detunings);

}  // namespace rydyn
