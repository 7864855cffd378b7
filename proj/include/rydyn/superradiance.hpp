#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rydyn/atomic_data.hpp"
#include "rydyn/kinetics.hpp"
#include "rydyn/stiff_ode.hpp"

namespace rydyn {

/// Uniform-density sphere.
struct CloudGeometry {
  double radius = 0.5e-3;  ///< m

  double volume() const;
  void validate() const;
};

/// Geometric cooperativity of a uniform sphere, 9 (sin x - x cos x)^2 / x^6
/// with x = kR. Series branch below x = 1e-3.
double cooperativity(double wavenumber, double radius);
double cooperativity_kr(double kr);

/// Order-of-magnitude collective decay rate (4 N / 3 n^5) alpha^3 Ry / hbar.
double superradiance_estimate(double atoms, int n);

/// Energy-ordered set of levels around the pumped state. Everything outside
/// the basis is lumped into a terminal sink.
struct LevelBasis {
  std::vector<RydbergLevel> levels;  ///< ascending energy
  std::size_t pumped = 0;

  /// All levels with |n' - n| <= n_window and l' <= l_max.
  static LevelBasis window(const RydbergAtom& atom, const StateLabel& pumped, int n_window = 5,
                           int l_max = 4);
  std::size_t size() const { return levels.size(); }
  std::size_t index_of(const StateLabel& state) const;  ///< throws DomainError if absent
  bool contains(const StateLabel& state) const;
};

/// One dipole-allowed in-basis pair, upper above lower.
struct RatePair {
  std::size_t upper = 0;
  std::size_t lower = 0;
  double omega = 0.0;            ///< rad/s
  double einstein_a = 0.0;       ///< A_el, s^-1
  double cooperativity = 1.0;    ///< C_el
  double gamma = 0.0;            ///< Gamma_el = C_el A_el
  double stimulated_down = 0.0;  ///< A n, per upper atom
  double absorption_up = 0.0;    ///< (g_u / g_l) A n, per lower atom
};

struct RateMatrix {
  std::vector<std::string> labels;
  std::size_t pumped = 0;
  std::vector<RatePair> pairs;
  /// Single-atom spontaneous decay of each level into the sink (all lower
  /// levels outside the basis).
  std::vector<double> sink_rate;
  /// Rate-weighted cooperativity of each level's sink channels (report only:
  /// sink levels carry no population so they add no collective term).
  std::vector<double> sink_cooperativity;
  double temperature = 0.0;
  double radius = 0.0;

  std::size_t size() const { return sink_rate.size(); }
  void validate() const;
};

/// Fills every in-basis pair and the sink rates. OpenMP over levels/pairs.
RateMatrix build_rates(const RydbergAtom& atom, const LevelBasis& basis, const CloudGeometry& geom,
                       double temperature = kRoomTemperature);
/// Serial reference; bit-identical to build_rates.
RateMatrix build_rates_serial(const RydbergAtom& atom, const LevelBasis& basis,
                              const CloudGeometry& geom, double temperature = kRoomTemperature);

struct LevelPopulations {
  std::vector<double> levels;
  double sink = 0.0;

  double rydberg_total() const;
  double total() const { return rydberg_total() + sink; }
};

/// Time derivative: collective emission Gamma_el N_e (N_l + 1), black-body
/// transfer, spontaneous decay into the sink and a constant pump into the
/// pumped level.
LevelPopulations cascade_rhs(const LevelPopulations& pops, const RateMatrix& rates, double pump);

/// Total photon emission rate of all in-basis pairs, sum Gamma N_e (N_l + 1).
double collective_emission_rate(const LevelPopulations& pops, const RateMatrix& rates);

struct CascadeTrajectory {
  std::vector<double> times;
  std::vector<LevelPopulations> states;
};

/// Stiff adaptive integration of the cascade, sampled at `times`.
CascadeTrajectory evolve(const LevelPopulations& initial, const RateMatrix& rates, double pump,
                         std::span<const double> times, const StiffOptions& options = {});
/// Convenience: `samples` points on a uniform grid over [0, duration].
CascadeTrajectory evolve(const LevelPopulations& initial, const RateMatrix& rates, double pump,
                         double duration, int samples = 200, const StiffOptions& options = {});

struct SteadyStateOptions {
  double residual_tolerance = 1e-10;  ///< relative to the pump
  int max_iterations = 400;   ///< per Newton pass
  int relax_attempts = 6;     ///< time-integration warm starts if Newton stalls
};

struct SteadyStateReport {
  int iterations = 0;
  double residual = 0.0;  ///< max |dN/dt| at the solution
  bool relaxed = false;   ///< a time-integration warm start was needed
};

/// Solves cascade_rhs = 0 (sink excluded) by pseudo-transient-continuation
/// damped Newton, seeded from the linear (collective-term-free) solution.
/// If Newton stalls the cascade is first relaxed by time integration.
/// Throws ConvergenceError when every attempt fails.
LevelPopulations steady_state_pumped(const RateMatrix& rates, double pump,
                                     const SteadyStateOptions& options = {},
                                     SteadyStateReport* report = nullptr);

/// Solution of the cascade with every collective N_e N_l term dropped.
LevelPopulations linear_steady_state(const RateMatrix& rates, double pump);

struct TransferRate {
  double superradiant = 0.0;  ///< sum over lower l of Gamma_rl (N_l + 1)
  double black_body = 0.0;    ///< in-basis black-body transfer out of r
  double total() const { return superradiant + black_body; }
};

/// Per-atom rate at which the pumped level loses population to other basis levels.
TransferRate effective_transfer_rate(const LevelPopulations& pops, const RateMatrix& rates);

struct CoupledSolution {
  LevelPopulations populations;
  TransferRate transfer;
  SteadyState kinetics;
  double pump = 0.0;
  int iterations = 0;
};

/// Fixed point between the cascade steady state (pump = R2 N_g) and the
/// three-state kinetics (N_g depends on gamma). `model.transfer` seeds the
/// iteration; converged when gamma changes by less than `tolerance`.
CoupledSolution self_consistent_transfer(const RateMatrix& rates, const KineticsParams& model,
                                         double tolerance = 1e-4, int max_iterations = 200,
                                         const SteadyStateOptions& options = {});

struct CascadeOptions {
  CloudGeometry geometry;
  double temperature = kRoomTemperature;
  int n_window = 5;
  int l_max = 4;
  bool enlarge = true;           ///< grow the window until gamma settles
  int window_step = 5;
  int max_window = 30;
  double window_tolerance = 0.05;
  double fixed_point_tolerance = 1e-4;
  int max_fixed_point = 200;
  /// Fixed pump into the excitation state, s^-1; unset couples the pump to
  /// the kinetics (R2 N_g) self-consistently.
  std::optional<double> pump;
  SteadyStateOptions steady_state;

  void validate() const;
};

struct WindowStep {
  int window = 0;
  std::size_t levels = 0;
  double gamma = 0.0;
};

struct CascadeResult {
  LevelBasis basis;
  RateMatrix rates;
  CoupledSolution solution;
  int window = 0;
  bool window_converged = false;  ///< false when max_window was reached first
  std::vector<WindowStep> history;
};

/// Self-consistent cascade for one pumped state, enlarging the basis window
/// by window_step until gamma changes by less than window_tolerance.
CascadeResult solve_cascade(const RydbergAtom& atom, const StateLabel& pumped, const KineticsParams& model,
                            const CascadeOptions& options = {});

}  // namespace rydyn
