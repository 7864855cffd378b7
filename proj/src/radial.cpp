#include "rydyn/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "rydyn/errors.hpp"

namespace rydyn {

RadialWavefunction numerov_wavefunction(double n_star, int l, double inner_radius,
                                        const NumerovOptions& options) {
  if (!(n_star > 0.0) || l < 0) throw DomainError("numerov_wavefunction: need n* > 0 and l >= 0");
  const double h = options.step;
  const double energy = -0.5 / (n_star * n_star);
  const double centrifugal = 4.0 * l * (l + 1) + 0.75;

  // g(x) for V = -1/r: (4l(l+1) + 3/4)/x^2 + 8 x^2 (V - E)
  auto g = [&](double x) { return centrifugal / (x * x) - 8.0 - 8.0 * energy * x * x; };

  const double r_outer = 2.0 * n_star * (n_star + options.outer_margin);
  const long outer_index = static_cast<long>(std::ceil(std::sqrt(r_outer) / h));
  const double floor_radius = std::max(inner_radius, 1e-3);
  const long inner_index = std::max(2L, static_cast<long>(std::ceil(std::sqrt(floor_radius) / h)));
  if (outer_index - inner_index < 8) throw DomainError("numerov_wavefunction: grid too short");

  // Inner turning point of the effective potential in x, located as the
  // smallest x where g changes sign from positive to negative.
  const double a = -8.0 * energy;  // > 0
  // g(x) x^2 = a x^4 - 8 x^2 + centrifugal; roots in x^2
  const double disc = 64.0 - 4.0 * a * centrifugal;
  const double x_turn_inner =
      disc > 0.0 ? std::sqrt((8.0 - std::sqrt(disc)) / (2.0 * a)) : std::sqrt(r_outer);

  const long count = outer_index - inner_index + 1;
  std::vector<double> psi(static_cast<std::size_t>(count), 0.0);
  const double h2 = h * h / 12.0;

  // index i in psi corresponds to lattice index inner_index + i
  auto lattice_x = [&](long i) { return static_cast<double>(inner_index + i) * h; };
  long top = count - 1;
  psi[top] = 1e-10;
  psi[top - 1] = 1e-10 * (1.0 + h * std::sqrt(std::max(g(lattice_x(top)), 0.0)));

  long stop = 0;
  for (long i = top - 1; i >= 1; --i) {
    const double x_minus = lattice_x(i - 1);
    const double next = (2.0 * psi[i] * (1.0 + 5.0 * h2 * g(lattice_x(i))) -
                         psi[i + 1] * (1.0 - h2 * g(lattice_x(i + 1)))) /
                        (1.0 - h2 * g(x_minus));
    if (x_minus < x_turn_inner && std::abs(next) > std::abs(psi[i])) {
      stop = i;
      break;
    }
    psi[i - 1] = next;
  }

  RadialWavefunction wf;
  wf.step = h;
  wf.first_index = inner_index + stop;
  wf.values.assign(psi.begin() + stop, psi.end());

  double norm = 0.0;
  for (std::size_t k = 0; k < wf.values.size(); ++k) {
    const double x = wf.x_at(wf.first_index + static_cast<long>(k));
    norm += wf.values[k] * wf.values[k] * x * x;
  }
  norm *= 2.0 * h;
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw ConvergenceError("numerov_wavefunction: normalisation failed");
  const double scale = 1.0 / std::sqrt(norm);
  // Positive outer lobe.
  const double sign = wf.values.back() < 0.0 ? -1.0 : 1.0;
  for (double& v : wf.values) v *= sign * scale;
  return wf;
}

double radial_integral(const RadialWavefunction& a, const RadialWavefunction& b, int power) {
  if (a.step != b.step) throw std::invalid_argument("radial_integral: lattices differ");
  const long lo = std::max(a.first_index, b.first_index);
  const long hi = std::min(a.last_index(), b.last_index());
  // u_a u_b r^p dr = 2 X_a X_b x^(2p + 2) dx
  const int r_power = power + 1;
  double sum = 0.0;
  for (long k = lo; k <= hi; ++k) {
    const double x = a.x_at(k);
    const double r = x * x;
    const double base = r_power >= 0 ? r : 1.0 / r;
    double weight = 1.0;
    for (int i = 0; i < std::abs(r_power); ++i) weight *= base;
    sum += a.values[static_cast<std::size_t>(k - a.first_index)] *
           b.values[static_cast<std::size_t>(k - b.first_index)] * weight;
  }
  return 2.0 * a.step * sum;
}

}  // namespace rydyn
