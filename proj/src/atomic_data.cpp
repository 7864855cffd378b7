#include "rydyn/atomic_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "rydyn/angular.hpp"
#include "rydyn/constants.hpp"
#include "rydyn/errors.hpp"

namespace rydyn {

double Transition::wavenumber() const { return omega / constants::speed_of_light; }

double Transition::absorption_rate() const {
  return static_cast<double>(upper.degeneracy()) / lower.degeneracy() * einstein_a * occupation;
}

double photon_occupation(double omega, double temperature) {
  if (temperature <= 0.0) return 0.0;
  const double x = constants::hbar * omega / (constants::boltzmann * temperature);
  return 1.0 / std::expm1(x);
}

bool dipole_allowed(const StateLabel& a, const StateLabel& b) {
  return std::abs(a.l - b.l) == 1 && std::abs(a.two_j - b.two_j) <= 2;
}

double einstein_a_from_oscillator(double omega, double f, int g_lower, int g_upper) {
  const double c = constants::speed_of_light;
  return 2.0 * constants::e2_gaussian * omega * omega / (constants::electron_mass * c * c * c) *
         static_cast<double>(g_lower) / g_upper * f;
}

double einstein_a_from_line_strength(double omega, double line_strength, int g_upper) {
  const double c = constants::speed_of_light;
  const double a0 = constants::bohr_radius;
  return 4.0 * omega * omega * omega * constants::e2_gaussian * a0 * a0 * line_strength /
         (3.0 * constants::hbar * c * c * c * g_upper);
}

RydbergAtom::RydbergAtom(AtomData data, NumerovOptions numerov)
    : data_(std::move(data)), numerov_(numerov) {}

RydbergAtom RydbergAtom::rubidium87() { return RydbergAtom(AtomData::load(default_data_path())); }

RydbergAtom RydbergAtom::hydrogen() { return RydbergAtom(AtomData::hydrogen()); }

bool RydbergAtom::valid_state(const StateLabel& s) const {
  if (s.l < 0 || s.l >= s.n) return false;
  if (s.two_j != 2 * s.l + 1 && s.two_j != 2 * s.l - 1) return false;
  if (s.two_j < 1) return false;
  return s.n >= data_.defects.min_n(s.l, s.two_j);
}

RydbergLevel RydbergAtom::level_energy(int n, int l, int two_j) const {
  const StateLabel s{n, l, two_j};
  if (!valid_state(s))
    throw DomainError("level_energy: invalid quantum numbers n=" + std::to_string(n) +
                      " l=" + std::to_string(l) + " 2j=" + std::to_string(two_j));
  RydbergLevel level;
  level.state = s;
  level.n_star = n - data_.defects.defect(n, l, two_j);
  level.energy = -constants::rydberg_energy / (level.n_star * level.n_star);
  return level;
}

RadialWavefunction RydbergAtom::wavefunction(const RydbergLevel& level) const {
  return numerov_wavefunction(level.n_star, level.l(), data_.core_radius, numerov_);
}

Transition RydbergAtom::transition(const RydbergLevel& upper, const RydbergLevel& lower,
                                   double temperature) const {
  if (!dipole_allowed(upper.state, lower.state))
    throw SelectionRuleError("transition " + upper.label() + " - " + lower.label() +
                             " is not dipole allowed");
  return transition(upper, lower, temperature, wavefunction(upper), wavefunction(lower));
}

Transition RydbergAtom::transition(const RydbergLevel& upper, const RydbergLevel& lower,
                                   double temperature, const RadialWavefunction& upper_wf,
                                   const RadialWavefunction& lower_wf) const {
  if (!dipole_allowed(upper.state, lower.state))
    throw SelectionRuleError("transition " + upper.label() + " - " + lower.label() +
                             " is not dipole allowed");
  const double gap = upper.energy - lower.energy;
  if (std::abs(gap) <= 1e-12 * std::abs(lower.energy))
    throw DomainError("transition " + upper.label() + " - " + lower.label() + ": degenerate energies");
  if (gap < 0.0)
    throw DomainError("transition: " + upper.label() + " lies below " + lower.label());
  if (temperature < 0.0) throw DomainError("transition: negative temperature");

  Transition t;
  t.upper = upper;
  t.lower = lower;
  t.temperature = temperature;
  t.omega = gap / constants::hbar;
  t.wavelength = two_pi * constants::speed_of_light / t.omega;
  t.radial_integral = radial_integral(upper_wf, lower_wf, 1);
  t.line_strength = line_strength_factor(upper.l(), upper.two_j(), lower.l(), lower.two_j()) *
                    t.radial_integral * t.radial_integral;
  const double omega_au = gap / constants::hartree;
  t.oscillator_strength = 2.0 / 3.0 * omega_au * t.line_strength / lower.degeneracy();
  t.einstein_a = einstein_a_from_oscillator(t.omega, t.oscillator_strength, lower.degeneracy(),
                                            upper.degeneracy());
  t.occupation = photon_occupation(t.omega, temperature);
  return t;
}

std::vector<RydbergLevel> RydbergAtom::dipole_partners(const RydbergLevel& level, int n_lo,
                                                       int n_hi) const {
  std::vector<RydbergLevel> out;
  for (int lp : {level.l() - 1, level.l() + 1}) {
    if (lp < 0) continue;
    for (int two_jp : {2 * lp - 1, 2 * lp + 1}) {
      if (two_jp < 1 || std::abs(two_jp - level.two_j()) > 2) continue;
      for (int np = std::max(n_lo, data_.defects.min_n(lp, two_jp)); np <= n_hi; ++np) {
        const StateLabel s{np, lp, two_jp};
        if (!valid_state(s)) continue;
        const auto partner = level_energy(np, lp, two_jp);
        if (std::abs(partner.energy - level.energy) <= 1e-12 * std::abs(level.energy)) continue;
        out.push_back(partner);
      }
    }
  }
  return out;
}

namespace {

struct PartnerRates {
  int n = 0;
  bool lower = false;
  double spontaneous = 0.0;
  double black_body = 0.0;
};

}  // namespace

LevelRates RydbergAtom::level_rates_impl(const RydbergLevel& level, double temperature,
                                         const LevelRatesOptions& options, bool parallel) const {
  if (temperature < 0.0) throw DomainError("level_rates: negative temperature");
  if (options.window < 1 || options.window_step < 1)
    throw DomainError("level_rates: window and window_step must be positive");

  const auto own_wf = wavefunction(level);
  std::vector<PartnerRates> contributions;

  // Contributions of all partners with n' in [n_lo, n_hi], appended in a
  // deterministic order so the serial and parallel sums agree bit for bit.
  auto add_range = [&](int n_lo, int n_hi) {
    const auto partners = dipole_partners(level, n_lo, n_hi);
    std::vector<PartnerRates> batch(partners.size());
    const long count = static_cast<long>(partners.size());
    auto work = [&](long i) {
      const auto& p = partners[static_cast<std::size_t>(i)];
      const auto p_wf = wavefunction(p);
      PartnerRates r;
      r.n = p.n();
      if (p.energy < level.energy) {
        const auto t = transition(level, p, temperature, own_wf, p_wf);
        r.lower = true;
        r.spontaneous = t.einstein_a;
        r.black_body = t.stimulated_emission_rate();
      } else {
        const auto t = transition(p, level, temperature, p_wf, own_wf);
        r.black_body = t.absorption_rate();
      }
      batch[static_cast<std::size_t>(i)] = r;
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (long i = 0; i < count; ++i) work(i);
    } else {
      for (long i = 0; i < count; ++i) work(i);
    }
    contributions.insert(contributions.end(), batch.begin(), batch.end());
  };

  auto black_body_within = [&](int window) {
    double sum = 0.0;
    for (const auto& c : contributions)
      if (std::abs(c.n - level.n()) <= window) sum += c.black_body;
    return sum;
  };

  LevelRates rates;
  rates.temperature = temperature;

  int window = options.window;
  add_range(1, level.n() + window + options.window_step);
  for (const auto& c : contributions) {
    if (!c.lower) continue;
    if (c.n <= options.terminal_n)
      rates.spontaneous += c.spontaneous;
    else
      rates.spontaneous_rydberg += c.spontaneous;
  }

  while (true) {
    const double previous = black_body_within(window);
    const double current = black_body_within(window + options.window_step);
    if (std::abs(current - previous) <= options.tolerance * std::abs(current)) {
      rates.black_body_transfer = current;
      rates.window = window + options.window_step;
      break;
    }
    if (!options.enlarge || window + 2 * options.window_step > options.max_window)
      throw ConvergenceError("level_rates(" + level.label() + "): A_BB changed by " +
                             std::to_string(std::abs(current - previous) / current * 100.0) +
                             "% between windows " + std::to_string(window) + " and " +
                             std::to_string(window + options.window_step));
    window += options.window_step;
    add_range(level.n() + window + 1, level.n() + window + options.window_step);
  }

  rates.black_body_ionization = black_body_ionization(level, temperature);
  return rates;
}

LevelRates RydbergAtom::level_rates(const RydbergLevel& level, double temperature,
                                    const LevelRatesOptions& options) const {
  return level_rates_impl(level, temperature, options, true);
}

LevelRates RydbergAtom::level_rates_serial(const RydbergLevel& level, double temperature,
                                           const LevelRatesOptions& options) const {
  return level_rates_impl(level, temperature, options, false);
}

namespace {

// integral_y^inf dx / (x (e^x - 1))
double planck_ionization_weight(double y) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([](double x) { return 1.0 / (x * std::expm1(x)); }, y,
                              std::numeric_limits<double>::infinity());
}

}  // namespace

double RydbergAtom::black_body_ionization(const RydbergLevel& level, double temperature) const {
  if (temperature < 0.0) throw DomainError("black_body_ionization: negative temperature");
  if (temperature == 0.0 || data_.ionization.empty()) return 0.0;

  for (const auto& e : data_.ionization)
    if (e.state == level.state && std::abs(e.temperature - temperature) < 1e-9) return e.rate;

  const IonizationEntry* best = nullptr;
  double best_distance = std::numeric_limits<double>::infinity();
  bool best_same_l = false;
  for (const auto& e : data_.ionization) {
    if (!valid_state(e.state)) continue;
    const bool same_l = e.state.l == level.l();
    const double distance = std::abs(level_energy(e.state.n, e.state.l, e.state.two_j).n_star - level.n_star);
    if ((same_l && !best_same_l) || (same_l == best_same_l && distance < best_distance)) {
      best = &e;
      best_distance = distance;
      best_same_l = same_l;
    }
  }
  if (best == nullptr) return 0.0;

  const auto ref = level_energy(best->state.n, best->state.l, best->state.two_j);
  const double scale = (ref.n_star / level.n_star) * (ref.n_star / level.n_star);
  const double binding = -level.energy;
  const double kt = constants::boltzmann * temperature;
  const double kt_ref = constants::boltzmann * best->temperature;
  const double thermal = planck_ionization_weight(binding / kt) / planck_ionization_weight(binding / kt_ref);
  return best->rate * scale * thermal;
}

}  // namespace rydyn
