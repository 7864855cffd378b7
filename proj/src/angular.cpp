#include "rydyn/angular.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace rydyn {
namespace {

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

bool triangle(int a, int b, int c) {
  return c >= std::abs(a - b) && c <= a + b && (a + b + c) % 2 == 0;
}

// log of the triangle coefficient Delta(abc), doubled arguments.
double log_delta(int a, int b, int c) {
  return 0.5 * (log_factorial((a + b - c) / 2) + log_factorial((a - b + c) / 2) +
                log_factorial((-a + b + c) / 2) - log_factorial((a + b + c) / 2 + 1));
}

}  // namespace

double wigner_6j(int j1, int j2, int j3, int j4, int j5, int j6) {
  if (!triangle(j1, j2, j3) || !triangle(j1, j5, j6) || !triangle(j4, j2, j6) ||
      !triangle(j4, j5, j3))
    return 0.0;

  const double log_prefactor =
      log_delta(j1, j2, j3) + log_delta(j1, j5, j6) + log_delta(j4, j2, j6) + log_delta(j4, j5, j3);

  const int a1 = (j1 + j2 + j3) / 2;
  const int a2 = (j1 + j5 + j6) / 2;
  const int a3 = (j4 + j2 + j6) / 2;
  const int a4 = (j4 + j5 + j3) / 2;
  const int b1 = (j1 + j2 + j4 + j5) / 2;
  const int b2 = (j2 + j3 + j5 + j6) / 2;
  const int b3 = (j3 + j1 + j6 + j4) / 2;

  const int t_min = std::max({a1, a2, a3, a4});
  const int t_max = std::min({b1, b2, b3});

  double sum = 0.0;
  for (int t = t_min; t <= t_max; ++t) {
    const double log_term = log_factorial(t + 1) - log_factorial(t - a1) - log_factorial(t - a2) -
                            log_factorial(t - a3) - log_factorial(t - a4) - log_factorial(b1 - t) -
                            log_factorial(b2 - t) - log_factorial(b3 - t);
    const double sign = (t % 2 == 0) ? 1.0 : -1.0;
    sum += sign * std::exp(log_term + log_prefactor);
  }
  return sum;
}

double line_strength_factor(int l, int two_j, int lp, int two_jp) {
  const double six_j = wigner_6j(2 * l, two_j, 1, two_jp, 2 * lp, 2);
  return (two_j + 1) * (two_jp + 1) * std::max(l, lp) * six_j * six_j;
}

}  // namespace rydyn
