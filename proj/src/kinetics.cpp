#include "rydyn/kinetics.hpp"

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "rydyn/errors.hpp"

namespace rydyn {
namespace {

void require_rate(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw DomainError(std::string("kinetics: ") + name + " must be finite and non-negative");
}

// Rydberg populations per ground atom at steady state: {addressable, dark, other}.
std::array<double, 3> rydberg_per_ground(const KineticsParams& p) {
  const double out = p.radiative + p.transfer + p.direct_loss;
  const double f = p.dark.capacity;
  const double kappa = p.dark.enabled() ? p.dark.exchange_rate : 0.0;
  const double d_a = out + p.probe + kappa * f;
  const double d_d = out + kappa * (1.0 - f);
  if (!(p.other_radiative + p.other_loss > 0.0))
    throw DomainError("steady_state: A_s + Gamma_s must be positive");
  if (!(p.radiative + p.probe + p.transfer + p.direct_loss > 0.0))
    throw DomainError("steady_state: A_r + R3 + gamma + Gamma_r must be positive");

  double a = 0.0;
  double d = 0.0;
  if (p.dark.enabled()) {
    const double det = d_a * d_d - kappa * kappa * f * (1.0 - f);
    if (!(det > 0.0)) throw DomainError("steady_state: singular dark-compartment system");
    a = ((1.0 - f) * p.excitation * d_d + kappa * (1.0 - f) * f * p.excitation) / det;
    d = (f * p.excitation * d_a + kappa * f * (1.0 - f) * p.excitation) / det;
  } else {
    a = p.excitation / d_a;
  }
  const double s = p.transfer * (a + d) / (p.other_loss + p.other_radiative);
  return {a, d, s};
}

// dx/dt = M x + b for x = (N_g, N_a, N_d, N_s).
Eigen::Matrix4d rate_matrix(const KineticsParams& p) {
  const double f = p.dark.enabled() ? p.dark.capacity : 0.0;
  const double kappa = p.dark.enabled() ? p.dark.exchange_rate : 0.0;
  const double out = p.radiative + p.transfer + p.direct_loss;
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 0) = -(p.background_loss + p.excitation);
  m(0, 1) = p.radiative + p.probe;
  m(0, 2) = p.radiative;
  m(0, 3) = p.other_radiative;
  m(1, 0) = (1.0 - f) * p.excitation;
  m(1, 1) = -(out + p.probe + kappa * f);
  m(1, 2) = kappa * (1.0 - f);
  m(2, 0) = f * p.excitation;
  m(2, 1) = kappa * f;
  m(2, 2) = -(out + kappa * (1.0 - f));
  m(3, 1) = p.transfer;
  m(3, 2) = p.transfer;
  m(3, 3) = -(p.other_loss + p.other_radiative);
  return m;
}

}  // namespace

double lorentzian_profile(double detuning, double fwhm) {
  if (!(fwhm > 0.0)) throw DomainError("lorentzian_profile: linewidth must be positive");
  const double u = 2.0 * detuning / fwhm;
  return 1.0 / (1.0 + u * u);
}

void ExcitationParams::validate() const {
  if (intermediate_detuning == 0.0) throw DomainError("excitation: intermediate detuning must be non-zero");
  if (!(linewidth > 0.0)) throw DomainError("excitation: linewidth must be positive");
}

double ExcitationParams::peak_rate() const {
  validate();
  const double eps2 = two_photon_rabi();
  return eps2 * eps2 / linewidth;
}

double two_photon_rate(const ExcitationParams& p) {
  return p.peak_rate() * lorentzian_profile(p.detuning, p.linewidth);
}

void KineticsParams::validate() const {
  require_rate(excitation, "R2");
  require_rate(probe, "R3");
  require_rate(radiative, "A_r");
  require_rate(other_radiative, "A_s");
  require_rate(transfer, "gamma");
  require_rate(direct_loss, "Gamma_r");
  require_rate(other_loss, "Gamma_s");
  require_rate(load_rate, "L");
  require_rate(background_loss, "Gamma_0");
  require_rate(black_body, "A_BB");
  require_rate(dark.exchange_rate, "kappa_Z");
  if (!(dark.capacity >= 0.0 && dark.capacity <= 1.0 / 3.0 + 1e-15))
    throw DomainError("kinetics: dark capacity must lie in [0, 1/3]");
}

void DetectionGeometry::validate() const {
  for (double v : {solid_angle, efficiency, branching_rydberg, branching_6p})
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("detection geometry values must lie in [0, 1]");
}

SteadyState steady_state(const KineticsParams& p) {
  p.validate();
  const auto [a, d, s] = rydberg_per_ground(p);
  const double loss = p.direct_loss * (a + d) + p.other_loss * s;
  const double total_loss = p.background_loss + loss;
  SteadyState out;
  if (p.load_rate == 0.0) return out;
  if (!(total_loss > 0.0)) throw DomainError("steady_state: no loss channel, N_g diverges");
  out.ground = p.load_rate / total_loss;
  out.rydberg_addressable = a * out.ground;
  out.rydberg_dark = d * out.ground;
  out.other = s * out.ground;
  return out;
}

double trap_loss_exact(const KineticsParams& p) {
  p.validate();
  const auto [a, d, s] = rydberg_per_ground(p);
  return p.direct_loss * (a + d) + p.other_loss * s;
}

double trap_loss_increase(const KineticsParams& p) {
  p.validate();
  if (p.dark.enabled()) return trap_loss_exact(p);
  if (!(p.other_radiative > 0.0)) throw DomainError("trap_loss_increase: A_s must be positive");
  const double denominator = p.radiative + p.probe + p.transfer;
  const double numerator = p.transfer * p.other_loss / p.other_radiative + p.direct_loss;
  if (numerator == 0.0 || p.excitation == 0.0) return 0.0;
  if (!(denominator > 0.0)) throw DomainError("trap_loss_increase: A_r + R3 + gamma must be positive");
  return p.excitation * numerator / denominator;
}

double trap_loss_high_probe_limit(const KineticsParams& p) {
  p.validate();
  if (!p.dark.enabled()) return 0.0;
  const double f = p.dark.capacity;
  const double d_d = p.radiative + p.transfer + p.direct_loss + p.dark.exchange_rate * (1.0 - f);
  if (!(d_d > 0.0)) throw DomainError("trap_loss_high_probe_limit: dark compartment never decays");
  if (!(p.other_radiative + p.other_loss > 0.0))
    throw DomainError("trap_loss_high_probe_limit: A_s + Gamma_s must be positive");
  const double dark = f * p.excitation / d_d;
  const double other = p.transfer * dark / (p.other_loss + p.other_radiative);
  return p.direct_loss * dark + p.other_loss * other;
}

double probe_count_rate(const KineticsParams& p, const DetectionGeometry& g) {
  p.validate();
  g.validate();
  if (p.dark.enabled()) return probe_count_rate_exact(p, g);
  if (p.probe == 0.0) return 0.0;
  return p.probe * p.excitation * g.product() / (p.radiative + p.probe + p.transfer);
}

double probe_count_rate_exact(const KineticsParams& p, const DetectionGeometry& g) {
  p.validate();
  g.validate();
  const auto per_ground = rydberg_per_ground(p);
  return p.probe * per_ground[0] * g.product();
}

double cascade_count_rate(const KineticsParams& p, const DetectionGeometry& g, double ground_atoms) {
  p.validate();
  g.validate();
  if (!(ground_atoms >= 0.0)) throw DomainError("cascade_count_rate: negative atom number");
  const double total = p.radiative + p.black_body;
  if (!(total > 0.0)) throw DomainError("cascade_count_rate: A_r + A_BB must be positive");
  return p.excitation * ground_atoms * g.product() * p.radiative / total;
}

double loss_from_fluorescence(double unexcited_atoms, double excited_atoms, double background_loss) {
  if (!(excited_atoms > 0.0) || !(unexcited_atoms > 0.0))
    throw DomainError("loss_from_fluorescence: atom numbers must be positive");
  if (!(background_loss >= 0.0)) throw DomainError("loss_from_fluorescence: negative background loss");
  return background_loss * (unexcited_atoms / excited_atoms - 1.0);
}

double slowest_relaxation_rate(const KineticsParams& p) {
  p.validate();
  Eigen::Matrix4d m = rate_matrix(p);
  if (!p.dark.enabled()) {
    // The dark row decouples; drop its eigenvalue.
    Eigen::Matrix3d reduced;
    const int keep[3] = {0, 1, 3};
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) reduced(i, k) = m(keep[i], keep[k]);
    return reduced.eigenvalues().real().cwiseAbs().minCoeff();
  }
  return m.eigenvalues().real().cwiseAbs().minCoeff();
}

KineticsTrajectory transient(const KineticsParams& p, const SteadyState& initial, double duration,
                             int samples, const StiffOptions& options) {
  if (!(duration > 0.0)) throw DomainError("transient: duration must be positive");
  if (samples < 1) throw DomainError("transient: need at least one sample");
  std::vector<double> times(static_cast<std::size_t>(samples) + 1);
  for (int i = 0; i <= samples; ++i) times[static_cast<std::size_t>(i)] = duration * i / samples;
  times.back() = duration;
  return transient(p, initial, times, options);
}

KineticsTrajectory transient(const KineticsParams& p, const SteadyState& initial,
                             std::span<const double> times, const StiffOptions& options) {
  p.validate();
  for (double v : {initial.ground, initial.rydberg_addressable, initial.rydberg_dark, initial.other})
    if (!(v >= 0.0)) throw DomainError("transient: initial populations must be non-negative");

  const Eigen::Matrix4d m = rate_matrix(p);
  Eigen::Vector4d source = Eigen::Vector4d::Zero();
  source[0] = p.load_rate;
  auto rhs = [&](const Eigen::VectorXd& x, Eigen::VectorXd& dxdt) { dxdt = m * x + source; };
  auto jac = [&](const Eigen::VectorXd&, Eigen::MatrixXd& j) { j = m; };

  StiffOptions opts = options;
  const double scale = std::max({initial.ground, initial.rydberg(), initial.other,
                                 p.load_rate / std::max(p.background_loss, 1e-300), 1.0});
  opts.absolute_tolerance = std::max(options.absolute_tolerance, 1e-14 * scale);

  Eigen::VectorXd x0(4);
  x0 << initial.ground, initial.rydberg_addressable, initial.rydberg_dark, initial.other;
  const auto raw = integrate_stiff(rhs, jac, x0, times, opts);

  KineticsTrajectory out;
  out.times.assign(times.begin(), times.end());
  out.states.reserve(raw.size());
  for (const auto& x : raw) out.states.push_back(SteadyState{x[0], x[1], x[2], x[3]});
  return out;
}

namespace {

std::vector<ScanPoint> scan_impl(const KineticsParams& p, const ExcitationParams& excitation,
                                 const DetectionGeometry& g, std::span<const double> detunings,
                                 bool parallel) {
  p.validate();
  g.validate();
  excitation.validate();
  std::vector<ScanPoint> out(detunings.size());
  const long count = static_cast<long>(detunings.size());
  auto work = [&](long i) {
    ExcitationParams e = excitation;
    e.detuning = detunings[static_cast<std::size_t>(i)];
    KineticsParams q = p;
    q.excitation = two_photon_rate(e);
    ScanPoint& pt = out[static_cast<std::size_t>(i)];
    pt.detuning = e.detuning;
    pt.excitation = q.excitation;
    pt.loss = trap_loss_increase(q);
    pt.ground = steady_state(q).ground;
    pt.cascade_counts = cascade_count_rate(q, g, pt.ground);
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) work(i);
  } else {
    for (long i = 0; i < count; ++i) work(i);
  }
  return out;
}

}  // namespace

std::vector<ScanPoint> scan(const KineticsParams& p, const ExcitationParams& excitation,
                            const DetectionGeometry& g, std::span<const double> detunings) {
  return scan_impl(p, excitation, g, detunings, true);
}

std::vector<ScanPoint> scan_serial(const KineticsParams& p, const ExcitationParams& excitation,
                                   const DetectionGeometry& g, std::span<const double> detunings) {
  return scan_impl(p, excitation, g, detunings, false);
}

}  // namespace rydyn
