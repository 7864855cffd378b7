#include "rydyn/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rydyn/constants.hpp"
#include "rydyn/errors.hpp"

namespace rydyn {

std::string to_string(Observable o) { return o == Observable::loss ? "loss" : "counts"; }

Observable parse_observable(const std::string& text) {
  if (text == "loss") return Observable::loss;
  if (text == "counts") return Observable::counts;
  throw DomainError("unknown observable '" + text + "' (expected loss or counts)");
}

std::string to_string(FitMode m) {
  switch (m) {
    case FitMode::standard: return "standard";
    case FitMode::combined: return "combined";
    case FitMode::dark: return "dark";
  }
  return "standard";
}

FitMode parse_fit_mode(const std::string& text) {
  if (text == "standard") return FitMode::standard;
  if (text == "combined") return FitMode::combined;
  if (text == "dark") return FitMode::dark;
  throw DomainError("unknown fit mode '" + text + "' (expected standard, combined or dark)");
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::poisson: return "poisson";
  }
  return "none";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "none") return NoiseKind::none;
  if (text == "gaussian") return NoiseKind::gaussian;
  if (text == "poisson") return NoiseKind::poisson;
  throw DomainError("unknown noise model '" + text + "' (expected none, gaussian or poisson)");
}

void ProbeScanDataset::validate() const {
  if (samples.size() < 4) throw DomainError("dataset: need at least 4 samples");
  bool varied = false;
  for (const auto& s : samples) {
    if (!(s.r3 >= 0.0) || !std::isfinite(s.r3)) throw DomainError("dataset: R3 values must be non-negative");
    if (!std::isfinite(s.value)) throw DomainError("dataset: non-finite observable");
    if (has_sigma && !(s.sigma > 0.0)) throw DomainError("dataset: uncertainties must be positive");
    if (s.r3 != samples.front().r3) varied = true;
  }
  if (!varied) throw DomainError("dataset: all R3 values are equal");
  known.validate();
  geometry.validate();
  if (!(known.excitation > 0.0)) throw DomainError("dataset: R2 must be positive");
}

namespace {

constexpr double kMaxDark = 1.0 / 3.0;

std::vector<std::string> parameter_names(Observable o, FitMode mode) {
  if (o == Observable::counts) return {"gamma", "amplitude"};
  switch (mode) {
    case FitMode::combined: return {"gamma", "loss_combination"};
    case FitMode::dark: return {"gamma", "other_loss", "dark_fraction"};
    default: return {"gamma", "other_loss"};
  }
}

void check_mode(Observable o, FitMode mode) {
  if (o == Observable::counts && mode != FitMode::standard)
    throw DomainError("count fits support only the standard mode");
}

// Model value and gradient with respect to the parameters.
double evaluate(const ProbeScanDataset& d, FitMode mode, const Eigen::VectorXd& p, double r3,
                Eigen::Ref<Eigen::VectorXd> grad) {
  const auto& k = d.known;
  const double gamma = p[0];
  const double denominator = k.radiative + r3 + gamma;
  if (d.observable == Observable::counts) {
    const double f = denominator > 0.0 ? p[1] * r3 / denominator : 0.0;
    grad[0] = denominator > 0.0 ? -f / denominator : 0.0;
    grad[1] = denominator > 0.0 ? r3 / denominator : 0.0;
    return f;
  }
  if (mode == FitMode::combined) {
    const double f = k.excitation * p[1] / denominator;
    grad[0] = -f / denominator;
    grad[1] = k.excitation / denominator;
    return f;
  }
  if (mode == FitMode::standard) {
    const double r2 = k.excitation;
    const double f = r2 * (gamma * p[1] / k.other_radiative + k.direct_loss) / denominator;
    grad[0] = r2 * p[1] / (k.other_radiative * denominator) - f / denominator;
    grad[1] = r2 * gamma / (k.other_radiative * denominator);
    return f;
  }
  // Dark compartment: exact steady state, central differences.
  auto value = [&](const Eigen::VectorXd& q) {
    KineticsParams m = k;
    m.probe = r3;
    m.transfer = q[0];
    m.other_loss = q[1];
    m.dark.capacity = q[2];
    return trap_loss_exact(m);
  };
  const double f = value(p);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = 1e-6 * std::max(std::abs(p[i]), i == 2 ? 1e-3 : 1.0);
    Eigen::VectorXd up = p, down = p;
    up[i] += h;
    down[i] = std::max(0.0, down[i] - h);
    if (i == 2) up[i] = std::min(up[i], kMaxDark);
    grad[i] = (value(up) - value(down)) / (up[i] - down[i]);
  }
  return f;
}

void project(Eigen::VectorXd& p, FitMode mode, Observable o) {
  p = p.cwiseMax(0.0);
  if (o == Observable::loss && mode == FitMode::dark) p[2] = std::min(p[2], kMaxDark);
}

struct Line {
  double intercept = 0.0;
  double slope = 0.0;
};

Line least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) return {sy / n, 0.0};
  return {(sxx * sy - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

// R3 at which the sorted curve first crosses `level`, linearly interpolated.
bool crossing(const std::vector<ProbeSample>& s, double level, bool falling, double& r3) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double a = s[i - 1].value - level;
    const double b = s[i].value - level;
    if (falling ? (a >= 0.0 && b < 0.0) : (a <= 0.0 && b > 0.0)) {
      r3 = s[i - 1].r3 + (s[i].r3 - s[i - 1].r3) * a / (a - b);
      return true;
    }
  }
  return false;
}

}  // namespace

Eigen::VectorXd initial_guess(const ProbeScanDataset& d, FitMode mode) {
  d.validate();
  check_mode(d.observable, mode);
  auto s = d.samples;
  std::stable_sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.r3 < b.r3; });
  const auto& k = d.known;
  const double span = s.back().r3 - s.front().r3;
  const double floor = 1e-3 * (k.radiative + span);
  const auto names = parameter_names(d.observable, mode);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names.size()));

  if (d.observable == Observable::loss) {
    // Gamma(R3) / Gamma(r0) falls to one half at R3 = A_r + gamma + 2 r0.
    const double r0 = s.front().r3;
    const double y0 = s.front().value;
    double knee = 0.0;
    double gamma = 0.0;
    if (y0 > 0.0 && crossing(s, 0.5 * y0, true, knee)) {
      gamma = knee - 2.0 * r0 - k.radiative;
    } else {
      std::vector<double> x, y;
      for (const auto& v : s)
        if (v.value > 0.0) {
          x.push_back(v.r3);
          y.push_back(1.0 / v.value);
        }
      if (x.size() >= 2) {
        const auto line = least_squares_line(x, y);
        if (line.slope > 0.0) gamma = line.intercept / line.slope - k.radiative;
      }
    }
    gamma = std::max(gamma, floor);
    const double at_zero = std::max(y0, 0.0) * (k.radiative + gamma + r0) / (k.radiative + gamma);
    const double combination = at_zero * (k.radiative + gamma) / k.excitation;
    p[0] = gamma;
    if (mode == FitMode::combined) {
      p[1] = combination;
    } else {
      p[1] = std::max(0.0, (combination - k.direct_loss) * k.other_radiative / gamma);
      if (mode == FitMode::dark) p[2] = 0.05;
    }
    return p;
  }

  // Counts: saturation level from the double-reciprocal line, knee at half of it.
  std::vector<double> x, y;
  double peak = 0.0;
  for (const auto& v : s) {
    peak = std::max(peak, v.value);
    if (v.r3 > 0.0 && v.value > 0.0) {
      x.push_back(1.0 / v.r3);
      y.push_back(1.0 / v.value);
    }
  }
  double amplitude = 0.0;
  double gamma = 0.0;
  if (x.size() >= 2) {
    const auto line = least_squares_line(x, y);
    if (line.intercept > 0.0) {
      amplitude = 1.0 / line.intercept;
      gamma = line.slope / line.intercept - k.radiative;
    }
  }
  if (!(amplitude > 0.0)) amplitude = 2.0 * peak;
  double knee = 0.0;
  if (crossing(s, 0.5 * amplitude, false, knee)) gamma = knee - k.radiative;
  p[0] = std::max(gamma, floor);
  p[1] = std::max(amplitude, std::numeric_limits<double>::min());
  return p;
}

double probe_model(const ProbeScanDataset& d, FitMode mode, const Eigen::VectorXd& parameters, double r3) {
  Eigen::VectorXd grad(parameters.size());
  return evaluate(d, mode, parameters, r3, grad);
}

double FitResult::value(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return parameters[static_cast<Eigen::Index>(i)];
  throw DomainError("fit result has no parameter '" + name + "'");
}

double FitResult::error(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) {
      const auto k = static_cast<Eigen::Index>(i);
      return std::sqrt(std::max(0.0, covariance(k, k)));
    }
  throw DomainError("fit result has no parameter '" + name + "'");
}

namespace {

FitResult levenberg_marquardt(const ProbeScanDataset& d, const FitOptions& options) {
  d.validate();
  check_mode(d.observable, options.mode);
  const FitMode mode = options.mode;
  const auto m = static_cast<Eigen::Index>(d.samples.size());

  FitResult result;
  result.observable = d.observable;
  result.mode = mode;
  result.names = parameter_names(d.observable, mode);
  const auto k = static_cast<Eigen::Index>(result.names.size());
  if (!d.has_sigma) result.warnings.push_back("no uncertainties supplied; unit weights used");

  Eigen::VectorXd w(m), y(m), r3(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& s = d.samples[static_cast<std::size_t>(i)];
    w[i] = d.has_sigma ? 1.0 / s.sigma : 1.0;
    y[i] = s.value;
    r3[i] = s.r3;
  }

  Eigen::MatrixXd jac(m, k);
  Eigen::VectorXd res(m);
  auto linearise = [&](const Eigen::VectorXd& p) {
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::VectorXd grad(k);
      const double f = evaluate(d, mode, p, r3[i], grad);
      res[i] = w[i] * (y[i] - f);
      jac.row(i) = w[i] * grad.transpose();
    }
    return res.squaredNorm();
  };
  auto chi_square = [&](const Eigen::VectorXd& p) {
    double sum = 0.0;
    Eigen::VectorXd grad(k);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double e = w[i] * (y[i] - evaluate(d, mode, p, r3[i], grad));
      sum += e * e;
    }
    return sum;
  };

  Eigen::VectorXd p = initial_guess(d, mode);
  double chi2 = linearise(p);
  const double scale = (w.cwiseProduct(y)).squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool converged = chi2 <= 1e-30 * scale;
  for (; it < options.max_iterations && !converged; ++it) {
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * res;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index i = 0; i < k; ++i)
        damped(i, i) += lambda * std::max(a(i, i), 1e-300);
      Eigen::VectorXd trial = p + damped.ldlt().solve(g);
      project(trial, mode, d.observable);
      const double trial_chi2 = chi_square(trial);
      if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
        double step = 0.0;
        for (Eigen::Index i = 0; i < k; ++i)
          step = std::max(step, std::abs(trial[i] - p[i]) / std::max(std::abs(trial[i]), 1e-300));
        p = trial;
        chi2 = linearise(p);
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (step < options.step_tolerance || chi2 <= 1e-30 * scale) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  if (!converged) result.warnings.push_back("fit did not converge in " + std::to_string(it) + " iterations");

  result.parameters = p;
  result.iterations = it;
  result.converged = converged;
  result.chi_square = chi2;
  result.degrees_of_freedom = static_cast<int>(m - k);
  result.residuals = res.cwiseQuotient(w);

  // Invert in column-equilibrated form; the parameters differ by many decades.
  const Eigen::MatrixXd a = jac.transpose() * jac;
  const Eigen::VectorXd col = a.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd equilibrated = col.asDiagonal() * a * col.asDiagonal();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(equilibrated);
  if (lu.isInvertible()) {
    result.covariance = col.asDiagonal() * lu.inverse() * col.asDiagonal();
    if (!d.has_sigma && result.degrees_of_freedom > 0)
      result.covariance *= chi2 / result.degrees_of_freedom;
    result.covariance = 0.5 * (result.covariance + result.covariance.transpose()).eval();
  } else {
    result.covariance = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
    result.warnings.push_back("normal matrix singular; covariance unavailable");
  }

  const auto& known = d.known;
  result.gamma = p[0];
  if (d.observable == Observable::counts) {
    result.amplitude = p[1];
  } else if (mode == FitMode::combined) {
    result.loss_combination = p[1];
    result.other_loss =
        p[0] > 0.0 ? std::max(0.0, (p[1] - known.direct_loss) * known.other_radiative / p[0]) : 0.0;
  } else {
    result.other_loss = p[1];
    result.loss_combination = p[0] * p[1] / known.other_radiative + known.direct_loss;
    if (mode == FitMode::dark) result.dark_fraction = p[2];
  }
  return result;
}

}  // namespace

FitResult fit_loss_curve(const ProbeScanDataset& d, const FitOptions& options) {
  if (d.observable != Observable::loss) throw DomainError("fit_loss_curve: dataset holds counts");
  return levenberg_marquardt(d, options);
}

FitResult fit_count_curve(const ProbeScanDataset& d, const FitOptions& options) {
  if (d.observable != Observable::counts) throw DomainError("fit_count_curve: dataset holds loss rates");
  return levenberg_marquardt(d, options);
}

FitResult fit_dataset(const ProbeScanDataset& d, const FitOptions& options) {
  return d.observable == Observable::loss ? fit_loss_curve(d, options) : fit_count_curve(d, options);
}

std::vector<FitResult> fit_batch(std::span<const ProbeScanDataset> datasets, const FitOptions& options) {
  std::vector<FitResult> out(datasets.size());
  const long n = static_cast<long>(datasets.size());
  bool failed = false;
  std::string message;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fit_dataset(datasets[static_cast<std::size_t>(i)], options);
    } catch (const std::exception& e) {
#pragma omp critical(rydyn_fit_batch)
      if (!failed) {
        failed = true;
        message = "dataset " + std::to_string(i) + ": " + e.what();
      }
    }
  }
  if (failed) throw DomainError(message);
  return out;
}

std::vector<FitResult> fit_batch_serial(std::span<const ProbeScanDataset> datasets,
                                        const FitOptions& options) {
  std::vector<FitResult> out;
  out.reserve(datasets.size());
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    try {
      out.push_back(fit_dataset(datasets[i], options));
    } catch (const std::exception& e) {
      throw DomainError("dataset " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<double> probe_grid(double max_r3, int points) {
  if (!(max_r3 > 0.0) || points < 2) throw DomainError("probe_grid: need max > 0 and at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = max_r3 * i / (points - 1);
  grid.back() = max_r3;
  return grid;
}

ProbeScanDataset synthesize_dataset(const KineticsParams& truth, const DetectionGeometry& geometry,
                                    Observable observable, std::span<const double> grid,
                                    const NoiseModel& noise, std::uint64_t seed) {
  truth.validate();
  geometry.validate();
  if (grid.size() < 4) throw DomainError("synthesize_dataset: need at least 4 grid points");
  if (noise.kind == NoiseKind::poisson && observable != Observable::counts)
    throw DomainError("synthesize_dataset: poisson noise applies to counts only");
  if (noise.kind == NoiseKind::gaussian && !(noise.relative_sigma > 0.0))
    throw DomainError("synthesize_dataset: relative sigma must be positive");
  if (noise.kind == NoiseKind::poisson && !(noise.exposure > 0.0))
    throw DomainError("synthesize_dataset: exposure must be positive");

  ProbeScanDataset d;
  d.observable = observable;
  d.known = truth;
  d.known.probe = 0.0;
  d.geometry = geometry;

  std::vector<double> mean(grid.size());
  double largest = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    KineticsParams q = truth;
    q.probe = grid[i];
    mean[i] = observable == Observable::loss ? trap_loss_increase(q) : probe_count_rate(q, geometry);
    largest = std::max(largest, std::abs(mean[i]));
  }
  const double relative = noise.kind == NoiseKind::gaussian ? noise.relative_sigma : 0.05;
  const double sigma_floor = std::max(relative * 1e-3 * largest, std::numeric_limits<double>::min());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ProbeSample s;
    s.r3 = grid[i];
    switch (noise.kind) {
      case NoiseKind::none:
        s.value = mean[i];
        s.sigma = std::max(relative * std::abs(mean[i]), sigma_floor);
        break;
      case NoiseKind::gaussian:
        s.sigma = std::max(relative * std::abs(mean[i]), sigma_floor);
        s.value = mean[i] + s.sigma * normal(rng);
        break;
      case NoiseKind::poisson: {
        std::poisson_distribution<long long> poisson(std::max(mean[i] * noise.exposure, 0.0));
        const double counts = mean[i] > 0.0 ? static_cast<double>(poisson(rng)) : 0.0;
        s.value = counts / noise.exposure;
        s.sigma = std::sqrt(std::max(counts, 1.0)) / noise.exposure;
        break;
      }
    }
    d.samples.push_back(s);
  }
  return d;
}

void CaptureParams::validate() const {
  if (!(density > 0.0)) throw DomainError("capture: density must be positive");
  if (!(temperature > 0.0)) throw DomainError("capture: temperature must be positive");
  if (!(c6 >= 0.0)) throw DomainError("capture: C6 must be non-negative");
  if (!(mass >= 0.0)) throw DomainError("capture: mass must be non-negative");
}

double c6_from_ghz_um6(double c6_ghz_um6) {
  const double planck = two_pi * constants::hbar;
  return c6_ghz_um6 * planck * 1e9 * 1e-36;
}

double thermal_speed(double temperature, double mass, SpeedConvention convention) {
  if (!(temperature > 0.0) || !(mass > 0.0)) throw DomainError("thermal_speed: T and m must be positive");
  const double kt = constants::boltzmann * temperature;
  if (convention == SpeedConvention::mean) return std::sqrt(8.0 * kt / (std::numbers::pi * mass));
  return std::sqrt(3.0 * kt / mass);
}

double capture_rate(const CaptureParams& p) {
  p.validate();
  if (p.c6 == 0.0) return 0.0;
  const double mass = p.mass > 0.0 ? p.mass : constants::rb87_mass;
  const double v = thermal_speed(p.temperature, mass, p.speed);
  const double sigma = std::numbers::pi * std::cbrt(p.c6 / (constants::boltzmann * p.temperature));
  return p.density * v * sigma;
}

double boltzmann_suppression(double energy_gap, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("boltzmann_suppression: temperature must be positive");
  if (!(energy_gap >= 0.0)) throw DomainError("boltzmann_suppression: energy gap must be non-negative");
  return std::exp(-energy_gap / (constants::boltzmann * temperature));
}

double electron_steady(double production, double dissipation) {
  if (!(dissipation > 0.0)) throw DomainError("electron_steady: dissipation rate must be positive");
  if (!(production >= 0.0)) throw DomainError("electron_steady: production rate must be non-negative");
  return production / dissipation;
}

}  // namespace rydyn
