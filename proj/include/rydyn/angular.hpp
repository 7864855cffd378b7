#pragma once

namespace rydyn {

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}. Arguments are doubled (2j) so
/// half-integer momenta stay exact. Returns 0 when a triangle rule fails.
double wigner_6j(int two_j1, int two_j2, int two_j3, int two_j4, int two_j5, int two_j6);

/// Fine-structure angular factor of the reduced dipole line strength,
/// (2j+1)(2j'+1) max(l,l') {l j 1/2; j' l' 1}^2, so that S = factor * R^2.
double line_strength_factor(int l, int two_j, int lp, int two_jp);

}  // namespace rydyn
