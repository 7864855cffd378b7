#pragma once

// Independent reference computations for the test suite. None of these call
// into the library's numerical kernels.

#include <cstdint>
#include <random>

namespace oracle {

/// Normalised hydrogen radial function R_nl(r), atomic units, from the
/// associated Laguerre closed form.
double hydrogen_radial(int n, int l, double r);

/// <n1 l1| r |n2 l2> for hydrogen by adaptive quadrature of the closed forms, a0.
double hydrogen_dipole_radial(int n1, int l1, int n2, int l2);

/// Absorption oscillator strength f(1s -> 2p) of hydrogen.
inline constexpr double kHydrogenF1s2p = 0.4162;

/// A = (2 e^2 omega^2 / m_e c^3) (g_l / g_u) f in SI, written out from the
/// constants rather than taken from the library.
double einstein_a_from_f(double omega, double f, double g_lower, double g_upper);

/// Monte-Carlo estimate of (1/V^2) int d3x int d3x' exp(i q.(x - x')) for a
/// uniform sphere, with |q| R = kr. Uses jittered stratified sampling of the
/// sphere (cells in r^3 and cos theta) and returns |mean exp(i q.x)|^2, which
/// is the double integral over all sample pairs.
double cooperativity_mc(double kr, int cells_per_axis, std::uint64_t seed);

/// Kinetics parameter draws for property tests.
struct KineticsDraw {
  double excitation, probe, radiative, other_radiative, transfer, direct_loss, other_loss;
  double load_rate, background_loss;
};

KineticsDraw draw_kinetics(std::mt19937_64& rng);

/// Log-uniform in [lo, hi].
double log_uniform(std::mt19937_64& rng, double lo, double hi);

}  // namespace oracle
