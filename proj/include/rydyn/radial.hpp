#pragma once

#include <vector>

namespace rydyn {

/// Radial function sampled on the lattice x = k * step, r = x^2 (atomic units).
///
/// The stored quantity is X(x) = u(r) / sqrt(x) with u = r R(r), which turns
/// the radial equation into X'' = g(x) X with an oscillation length that is
/// nearly uniform in x. Normalised so that 2 * integral X^2 x^2 dx = 1.
struct RadialWavefunction {
  double step = 0.0;
  long first_index = 0;  ///< lattice index of values.front()
  std::vector<double> values;

  long last_index() const { return first_index + static_cast<long>(values.size()) - 1; }
  double x_at(long index) const { return static_cast<double>(index) * step; }
};

struct NumerovOptions {
  double step = 0.01;          ///< lattice spacing in sqrt(a0)
  double outer_margin = 15.0;  ///< integrate from r = 2 n* (n* + margin)
};

/// Inward Numerov integration of the pure-Coulomb radial equation at the
/// energy -1/(2 n*^2) Hartree. Integration stops at `inner_radius` (a0) or,
/// inside the inner classical turning point, as soon as the solution starts
/// growing inward (the irregular Coulomb component takes over when n* is not
/// an integer). Exact for hydrogen when n* is integral.
RadialWavefunction numerov_wavefunction(double n_star, int l, double inner_radius,
                                        const NumerovOptions& options = {});

/// integral u_a u_b r^power dr over the common support, in a0^power.
double radial_integral(const RadialWavefunction& a, const RadialWavefunction& b, int power = 1);

}  // namespace rydyn
