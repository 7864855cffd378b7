#pragma once

#include <array>
#include <string_view>

#include "rydyn/quantum_defects.hpp"

namespace rydyn {

/// Published measurements and calculations for the four excitation states of
/// the reference MOT experiment. Values are immutable; every file that
/// reports them carries the matching source tag.
struct ReferenceState {
  std::string_view label;
  StateLabel state;
  // transfer-rate summary
  double gamma_counts;     ///< gamma from the probe count method, s^-1
  double gamma_loss;       ///< gamma from the probe loss method, s^-1
  double black_body;       ///< A_BB, s^-1
  double radiative;        ///< A_r, s^-1
  double other_radiative;  ///< A_s, s^-1
  double other_loss;       ///< Gamma_s, s^-1
  // transfer-rate comparison
  double gamma_calculated;  ///< superradiant cascade model, s^-1
  double gamma_measured;    ///< s^-1
  // trap-loss comparison
  double other_loss_calculated;  ///< Gamma_s, s^-1
  double ionization;             ///< Gamma_BBI at 300 K, s^-1
};

inline constexpr std::string_view kSourceTransferSummary = "ref:transfer-summary";
inline constexpr std::string_view kSourceTransferComparison = "ref:transfer-comparison";
inline constexpr std::string_view kSourceLossComparison = "ref:loss-comparison";
inline constexpr std::string_view kSourceExcitationRate = "ref:peak-excitation";

/// Peak two-photon excitation rate quoted for 28D, s^-1.
inline constexpr double kReferenceExcitationRate = 110.0;
inline constexpr StateLabel kReferenceExcitationState{28, 2, 5};

inline constexpr std::array<ReferenceState, 4> kReferenceStates{{
    {"28D5/2", {28, 2, 5}, 1.2e5, 1.3e5, 2.6e4, 4.1e4, 3.1e4, 265.0, 1.7e5, 1.3e5, 212.0, 322.0},
    {"43D5/2", {43, 2, 5}, 7.4e4, 7.2e4, 1.1e4, 1.1e4, 2.0e4, 602.0, 2.4e5, 7.4e4, 470.0, 720.0},
    {"58D5/2", {58, 2, 5}, 2.6e4, 2.0e4, 6.1e3, 4.8e3, 7.4e3, 433.0, 1.2e5, 2.0e4, 329.0, 457.0},
    {"30S1/2", {30, 0, 1}, 3.9e5, 5.0e5, 2.3e4, 4.4e4, 3.3e4, 83.0, 2.2e5, 5.0e5, 77.0, 265.0},
}};

/// nullptr when the state has no reference entry.
inline const ReferenceState* find_reference(const StateLabel& state) {
  for (const auto& r : kReferenceStates)
    if (r.state == state) return &r;
  return nullptr;
}

}  // namespace rydyn
