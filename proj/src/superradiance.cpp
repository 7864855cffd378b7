#include "rydyn/superradiance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "rydyn/constants.hpp"
#include "rydyn/errors.hpp"

namespace rydyn {

double CloudGeometry::volume() const { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

void CloudGeometry::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("cloud radius must be positive");
}

double cooperativity_kr(double x) {
  if (!(x >= 0.0)) throw DomainError("cooperativity: kR must be non-negative");
  if (x < 1e-3) {
    const double x2 = x * x;
    return 1.0 - x2 / 5.0 + 3.0 * x2 * x2 / 175.0;
  }
  const double form = 3.0 * (std::sin(x) - x * std::cos(x)) / (x * x * x);
  return form * form;
}

double cooperativity(double wavenumber, double radius) {
  if (!(radius > 0.0)) throw DomainError("cooperativity: radius must be positive");
  if (!(wavenumber >= 0.0)) throw DomainError("cooperativity: wavenumber must be non-negative");
  return cooperativity_kr(wavenumber * radius);
}

double superradiance_estimate(double atoms, int n) {
  if (!(atoms >= 1.0)) throw DomainError("superradiance_estimate: need at least one atom");
  if (n < 1) throw DomainError("superradiance_estimate: n must be positive");
  const double alpha = constants::fine_structure;
  const double n5 = std::pow(static_cast<double>(n), 5);
  return 4.0 * atoms / (3.0 * n5) * alpha * alpha * alpha * constants::rydberg_energy / constants::hbar;
}

LevelBasis LevelBasis::window(const RydbergAtom& atom, const StateLabel& pumped, int n_window, int l_max) {
  if (!atom.valid_state(pumped)) throw DomainError("LevelBasis: invalid pumped state");
  if (n_window < 0 || l_max < 0) throw DomainError("LevelBasis: window parameters must be non-negative");
  LevelBasis basis;
  for (int n = std::max(1, pumped.n - n_window); n <= pumped.n + n_window; ++n)
    for (int l = 0; l <= std::min(l_max, n - 1); ++l)
      for (int two_j : {2 * l - 1, 2 * l + 1}) {
        const StateLabel s{n, l, two_j};
        if (atom.valid_state(s)) basis.levels.push_back(atom.level(s));
      }
  std::stable_sort(basis.levels.begin(), basis.levels.end(),
                   [](const RydbergLevel& a, const RydbergLevel& b) { return a.energy < b.energy; });
  basis.pumped = basis.index_of(pumped);
  return basis;
}

bool LevelBasis::contains(const StateLabel& state) const {
  return std::any_of(levels.begin(), levels.end(), [&](const auto& l) { return l.state == state; });
}

std::size_t LevelBasis::index_of(const StateLabel& state) const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i].state == state) return i;
  throw DomainError("LevelBasis: state " + format_state_label(state) + " not in basis");
}

void RateMatrix::validate() const {
  const auto n = size();
  if (n == 0) throw DomainError("RateMatrix: empty basis");
  if (pumped >= n) throw DomainError("RateMatrix: pumped index out of range");
  for (const auto& p : pairs) {
    if (p.upper >= n || p.lower >= n || p.upper == p.lower)
      throw DomainError("RateMatrix: pair index out of range");
    if (!(p.gamma >= 0.0 && p.stimulated_down >= 0.0 && p.absorption_up >= 0.0))
      throw DomainError("RateMatrix: negative rate");
  }
}

namespace {

struct PairTask {
  std::size_t upper;  // index into the wavefunction list
  std::size_t lower;
  bool sink;
};

RateMatrix build_rates_impl(const RydbergAtom& atom, const LevelBasis& basis, const CloudGeometry& geom,
                            double temperature, bool parallel) {
  if (basis.size() == 0) throw DomainError("build_rates: empty basis");
  geom.validate();
  if (temperature < 0.0) throw DomainError("build_rates: negative temperature");

  const std::size_t n = basis.size();
  std::vector<RydbergLevel> all = basis.levels;
  std::map<StateLabel, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[all[i].state] = i;

  int n_max = 0;
  for (const auto& l : basis.levels) n_max = std::max(n_max, l.n());

  std::vector<PairTask> tasks;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& level = basis.levels[i];
    for (const auto& partner : atom.dipole_partners(level, 1, n_max)) {
      if (partner.energy >= level.energy) continue;
      const auto it = index.find(partner.state);
      if (it != index.end() && it->second < n) {
        tasks.push_back({i, it->second, false});
        continue;
      }
      std::size_t k;
      if (it == index.end()) {
        k = all.size();
        all.push_back(partner);
        index[partner.state] = k;
      } else {
        k = it->second;
      }
      tasks.push_back({i, k, true});
    }
  }

  std::vector<RadialWavefunction> wavefunctions(all.size());
  const long level_count = static_cast<long>(all.size());
  std::vector<Transition> transitions(tasks.size());
  const long task_count = static_cast<long>(tasks.size());
  if (parallel) {
#pragma omp parallel
    {
#pragma omp for schedule(dynamic, 1)
      for (long i = 0; i < level_count; ++i)
        wavefunctions[static_cast<std::size_t>(i)] = atom.wavefunction(all[static_cast<std::size_t>(i)]);
#pragma omp for schedule(dynamic, 4)
      for (long t = 0; t < task_count; ++t) {
        const auto& task = tasks[static_cast<std::size_t>(t)];
        transitions[static_cast<std::size_t>(t)] =
            atom.transition(all[task.upper], all[task.lower], temperature, wavefunctions[task.upper],
                            wavefunctions[task.lower]);
      }
    }
  } else {
    for (long i = 0; i < level_count; ++i)
      wavefunctions[static_cast<std::size_t>(i)] = atom.wavefunction(all[static_cast<std::size_t>(i)]);
    for (long t = 0; t < task_count; ++t) {
      const auto& task = tasks[static_cast<std::size_t>(t)];
      transitions[static_cast<std::size_t>(t)] =
          atom.transition(all[task.upper], all[task.lower], temperature, wavefunctions[task.upper],
                          wavefunctions[task.lower]);
    }
  }

  RateMatrix rates;
  rates.pumped = basis.pumped;
  rates.temperature = temperature;
  rates.radius = geom.radius;
  rates.sink_rate.assign(n, 0.0);
  rates.sink_cooperativity.assign(n, 0.0);
  std::vector<double> weighted_c(n, 0.0);
  for (const auto& l : basis.levels) rates.labels.push_back(l.label());

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    const auto& tr = transitions[t];
    const double kr = tr.wavenumber() * geom.radius;
    if (task.sink) {
      rates.sink_rate[task.upper] += tr.einstein_a;
      weighted_c[task.upper] += tr.einstein_a * (kr < 1.0 ? 1.0 : cooperativity_kr(kr));
      continue;
    }
    RatePair p;
    p.upper = task.upper;
    p.lower = task.lower;
    p.omega = tr.omega;
    p.einstein_a = tr.einstein_a;
    p.cooperativity = cooperativity_kr(kr);
    p.gamma = p.cooperativity * p.einstein_a;
    p.stimulated_down = tr.stimulated_emission_rate();
    p.absorption_up = tr.absorption_rate();
    rates.pairs.push_back(p);
  }
  for (std::size_t i = 0; i < n; ++i)
    rates.sink_cooperativity[i] = rates.sink_rate[i] > 0.0 ? weighted_c[i] / rates.sink_rate[i] : 0.0;
  return rates;
}

// dN/dt for the basis levels; the sink inflow is returned separately.
void rhs_raw(const RateMatrix& rates, double pump, const double* pops, double* d_pops, double* d_sink) {
  const std::size_t n = rates.size();
  std::fill(d_pops, d_pops + n, 0.0);
  for (const auto& p : rates.pairs) {
    const double flow = p.gamma * pops[p.upper] * (pops[p.lower] + 1.0) +
                        p.stimulated_down * pops[p.upper] - p.absorption_up * pops[p.lower];
    d_pops[p.upper] -= flow;
    d_pops[p.lower] += flow;
  }
  double sink = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double out = rates.sink_rate[i] * pops[i];
    d_pops[i] -= out;
    sink += out;
  }
  d_pops[rates.pumped] += pump;
  if (d_sink != nullptr) *d_sink = sink;
}

// Jacobian of rhs_raw with respect to the basis populations (row-major n x n
// written into an Eigen matrix of at least n x n).
void jacobian_raw(const RateMatrix& rates, const double* pops, Eigen::Ref<Eigen::MatrixXd> jac) {
  const std::size_t n = rates.size();
  jac.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)).setZero();
  for (const auto& p : rates.pairs) {
    const auto u = static_cast<Eigen::Index>(p.upper);
    const auto l = static_cast<Eigen::Index>(p.lower);
    const double d_upper = p.gamma * (pops[p.lower] + 1.0) + p.stimulated_down;
    const double d_lower = p.gamma * pops[p.upper] - p.absorption_up;
    jac(u, u) -= d_upper;
    jac(u, l) -= d_lower;
    jac(l, u) += d_upper;
    jac(l, l) += d_lower;
  }
  for (std::size_t i = 0; i < n; ++i)
    jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= rates.sink_rate[i];
}

void check_populations(const LevelPopulations& pops, const RateMatrix& rates) {
  if (pops.levels.size() != rates.size())
    throw DomainError("cascade: population vector does not match the rate matrix");
  for (double v : pops.levels)
    if (!(v >= 0.0)) throw DomainError("cascade: populations must be non-negative");
  if (!(pops.sink >= 0.0)) throw DomainError("cascade: sink population must be non-negative");
}

}  // namespace

RateMatrix build_rates(const RydbergAtom& atom, const LevelBasis& basis, const CloudGeometry& geom,
                       double temperature) {
  return build_rates_impl(atom, basis, geom, temperature, true);
}

RateMatrix build_rates_serial(const RydbergAtom& atom, const LevelBasis& basis,
                              const CloudGeometry& geom, double temperature) {
  return build_rates_impl(atom, basis, geom, temperature, false);
}

double LevelPopulations::rydberg_total() const {
  return std::accumulate(levels.begin(), levels.end(), 0.0);
}

LevelPopulations cascade_rhs(const LevelPopulations& pops, const RateMatrix& rates, double pump) {
  rates.validate();
  check_populations(pops, rates);
  if (!(pump >= 0.0)) throw DomainError("cascade_rhs: pump must be non-negative");
  LevelPopulations d;
  d.levels.resize(rates.size());
  rhs_raw(rates, pump, pops.levels.data(), d.levels.data(), &d.sink);
  return d;
}

double collective_emission_rate(const LevelPopulations& pops, const RateMatrix& rates) {
  double total = 0.0;
  for (const auto& p : rates.pairs) total += p.gamma * pops.levels[p.upper] * (pops.levels[p.lower] + 1.0);
  return total;
}

CascadeTrajectory evolve(const LevelPopulations& initial, const RateMatrix& rates, double pump,
                         std::span<const double> times, const StiffOptions& options) {
  rates.validate();
  check_populations(initial, rates);
  if (!(pump >= 0.0)) throw DomainError("evolve: pump must be non-negative");
  if (times.empty() || !(times.back() > 0.0)) throw DomainError("evolve: duration must be positive");

  const auto n = static_cast<Eigen::Index>(rates.size());
  auto rhs = [&](const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    double sink = 0.0;
    rhs_raw(rates, pump, x.data(), dx.data(), &sink);
    dx[n] = sink;
  };
  auto jac = [&](const Eigen::VectorXd& x, Eigen::MatrixXd& j) {
    j.setZero();
    jacobian_raw(rates, x.data(), j);
    for (Eigen::Index i = 0; i < n; ++i) j(n, i) = rates.sink_rate[static_cast<std::size_t>(i)];
  };

  Eigen::VectorXd x0(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) x0[i] = initial.levels[static_cast<std::size_t>(i)];
  x0[n] = initial.sink;

  StiffOptions opts = options;
  const double scale = std::max({initial.total(), pump * times.back(), 1.0});
  opts.absolute_tolerance = std::max(options.absolute_tolerance, 1e-13 * scale);

  std::vector<Eigen::VectorXd> raw;
  try {
    raw = integrate_stiff(rhs, jac, x0, times, opts);
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string("evolve (") + std::to_string(rates.size()) + " levels, pump " +
                           std::to_string(pump) + "/s): " + e.what());
  }

  CascadeTrajectory out;
  out.times.assign(times.begin(), times.end());
  for (const auto& x : raw) {
    LevelPopulations p;
    p.levels.assign(x.data(), x.data() + n);
    p.sink = x[n];
    out.states.push_back(std::move(p));
  }
  return out;
}

CascadeTrajectory evolve(const LevelPopulations& initial, const RateMatrix& rates, double pump,
                         double duration, int samples, const StiffOptions& options) {
  if (!(duration > 0.0)) throw DomainError("evolve: duration must be positive");
  if (samples < 1) throw DomainError("evolve: need at least one sample");
  std::vector<double> times(static_cast<std::size_t>(samples) + 1);
  for (int i = 0; i <= samples; ++i) times[static_cast<std::size_t>(i)] = duration * i / samples;
  times.back() = duration;
  return evolve(initial, rates, pump, times, options);
}

LevelPopulations linear_steady_state(const RateMatrix& rates, double pump) {
  rates.validate();
  if (!(pump >= 0.0)) throw DomainError("linear_steady_state: pump must be non-negative");
  const auto n = static_cast<Eigen::Index>(rates.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : rates.pairs) {
    const auto u = static_cast<Eigen::Index>(p.upper);
    const auto l = static_cast<Eigen::Index>(p.lower);
    m(u, u) -= p.gamma + p.stimulated_down;
    m(l, u) += p.gamma + p.stimulated_down;
    m(l, l) -= p.absorption_up;
    m(u, l) += p.absorption_up;
  }
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) -= rates.sink_rate[static_cast<std::size_t>(i)];
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[static_cast<Eigen::Index>(rates.pumped)] = -pump;
  const Eigen::VectorXd x = m.fullPivLu().solve(b);
  LevelPopulations out;
  out.levels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out.levels[static_cast<std::size_t>(i)] = std::max(0.0, x[i]);
  return out;
}

namespace {

// Pseudo-transient continuation (damped Newton with a shrinking implicit
// Euler regulariser). Returns the final max-norm residual.
double ptc_iterate(const RateMatrix& rates, double pump, Eigen::VectorXd& x, double target,
                   int max_iterations, int& iterations) {
  const auto n = static_cast<Eigen::Index>(rates.size());
  Eigen::VectorXd f(n);
  Eigen::MatrixXd jac(n, n);
  auto residual = [&](const Eigen::VectorXd& v) {
    rhs_raw(rates, pump, v.data(), f.data(), nullptr);
    return f.cwiseAbs().maxCoeff();
  };

  double res = residual(x);
  jacobian_raw(rates, x.data(), jac);
  double tau = 1.0 / std::max(jac.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (int it = 0; it < max_iterations && res > target; ++it, ++iterations) {
    jacobian_raw(rates, x.data(), jac);
    Eigen::MatrixXd a = -jac;
    if (std::isfinite(tau)) a.diagonal().array() += 1.0 / tau;
    const Eigen::VectorXd delta = a.partialPivLu().solve(f);
    // Fraction to the boundary keeps every population strictly positive.
    double fraction = 1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (delta[i] < 0.0 && x[i] + delta[i] < 0.0) fraction = std::min(fraction, -0.9 * x[i] / delta[i]);
    const Eigen::VectorXd trial = (x + fraction * delta).cwiseMax(0.0);
    const double previous = res;
    const double trial_res = residual(trial);
    if (!std::isfinite(trial_res) || trial_res > 10.0 * previous) {
      tau *= 0.25;
      residual(x);
      continue;
    }
    x = trial;
    res = trial_res;
    if (fraction < 1.0)
      tau *= 0.5;
    else
      tau *= std::clamp(previous / std::max(res, 1e-300), 1.2, 10.0);
    if (tau > 1e12) tau = std::numeric_limits<double>::infinity();
  }
  return res;
}

}  // namespace

LevelPopulations steady_state_pumped(const RateMatrix& rates, double pump, const SteadyStateOptions& options,
                                     SteadyStateReport* report) {
  rates.validate();
  if (!(pump >= 0.0)) throw DomainError("steady_state_pumped: pump must be non-negative");
  if (report != nullptr) *report = {};
  LevelPopulations out;
  if (pump == 0.0) {
    out.levels.assign(rates.size(), 0.0);
    return out;
  }
  const auto n = static_cast<Eigen::Index>(rates.size());
  const auto seed = linear_steady_state(rates, pump);
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(seed.levels.data(), n);
  const double target = options.residual_tolerance * pump;

  int iterations = 0;
  Eigen::VectorXd x = x0;
  double res = ptc_iterate(rates, pump, x, target, options.max_iterations, iterations);

  // Newton can stall where stimulated gain into a lower level outruns its
  // decay; relax the cascade in time first and polish from there.
  bool relaxed = false;
  if (res > target) {
    relaxed = true;
    double slowest = std::numeric_limits<double>::infinity();
    for (double r : rates.sink_rate)
      if (r > 0.0) slowest = std::min(slowest, r);
    if (!std::isfinite(slowest)) slowest = 1.0;
    double horizon = 20.0 / slowest;
    LevelPopulations current = seed;
    for (int attempt = 0; attempt < options.relax_attempts && res > target; ++attempt) {
      const auto traj = evolve(current, rates, pump, horizon, 1);
      current = traj.states.back();
      current.sink = 0.0;
      x = Eigen::Map<const Eigen::VectorXd>(current.levels.data(), n);
      res = ptc_iterate(rates, pump, x, target, options.max_iterations, iterations);
      horizon *= 2.0;
    }
  }
  if (report != nullptr) {
    report->iterations = iterations;
    report->residual = res;
    report->relaxed = relaxed;
  }
  if (res > target)
    throw ConvergenceError("steady_state_pumped: residual " + std::to_string(res) + " after " +
                           std::to_string(iterations) + " iterations (target " + std::to_string(target) +
                           ")");
  out.levels.assign(x.data(), x.data() + n);
  return out;
}

TransferRate effective_transfer_rate(const LevelPopulations& pops, const RateMatrix& rates) {
  rates.validate();
  check_populations(pops, rates);
  TransferRate out;
  const auto r = rates.pumped;
  for (const auto& p : rates.pairs) {
    if (p.upper == r) {
      out.superradiant += p.gamma * (pops.levels[p.lower] + 1.0);
      out.black_body += p.stimulated_down;
    } else if (p.lower == r) {
      out.black_body += p.absorption_up;
    }
  }
  return out;
}

CoupledSolution self_consistent_transfer(const RateMatrix& rates, const KineticsParams& model,
                                         double tolerance, int max_iterations,
                                         const SteadyStateOptions& options) {
  rates.validate();
  model.validate();
  CoupledSolution sol;
  double gamma = model.transfer;
  if (!(gamma > 0.0)) {
    LevelPopulations empty;
    empty.levels.assign(rates.size(), 0.0);
    gamma = effective_transfer_rate(empty, rates).total();
  }
  for (int it = 1; it <= max_iterations; ++it) {
    KineticsParams q = model;
    q.transfer = gamma;
    sol.kinetics = steady_state(q);
    sol.pump = q.excitation * sol.kinetics.ground;
    sol.populations = steady_state_pumped(rates, sol.pump, options);
    sol.transfer = effective_transfer_rate(sol.populations, rates);
    sol.iterations = it;
    const double next = sol.transfer.total();
    if (std::abs(next - gamma) <= tolerance * next) return sol;
    gamma = next;
  }
  throw ConvergenceError("self_consistent_transfer: gamma did not settle within " +
                         std::to_string(max_iterations) + " iterations");
}

void CascadeOptions::validate() const {
  geometry.validate();
  if (temperature < 0.0) throw DomainError("cascade: negative temperature");
  if (n_window < 0 || l_max < 0 || window_step < 1 || max_window < n_window)
    throw DomainError("cascade: invalid basis window settings");
  if (!(window_tolerance > 0.0) || !(fixed_point_tolerance > 0.0) || max_fixed_point < 1)
    throw DomainError("cascade: tolerances must be positive");
  if (pump && !(*pump >= 0.0)) throw DomainError("cascade: pump must be non-negative");
}

CascadeResult solve_cascade(const RydbergAtom& atom, const StateLabel& pumped, const KineticsParams& model,
                            const CascadeOptions& options) {
  options.validate();
  CascadeResult result;
  double previous = 0.0;
  for (int window = options.n_window;; window += options.window_step) {
    window = std::min(window, options.max_window);
    auto basis = LevelBasis::window(atom, pumped, window, options.l_max);
    auto rates = build_rates(atom, basis, options.geometry, options.temperature);
    CoupledSolution solution;
    if (options.pump) {
      solution.pump = *options.pump;
      solution.populations = steady_state_pumped(rates, solution.pump, options.steady_state);
      solution.transfer = effective_transfer_rate(solution.populations, rates);
      KineticsParams coupled = model;
      coupled.transfer = solution.transfer.total();
      solution.kinetics = steady_state(coupled);
    } else {
      solution = self_consistent_transfer(rates, model, options.fixed_point_tolerance, options.max_fixed_point,
                                          options.steady_state);
    }
    const double gamma = solution.transfer.total();
    result.history.push_back({window, basis.size(), gamma});
    result.basis = std::move(basis);
    result.rates = std::move(rates);
    result.solution = std::move(solution);
    result.window = window;
    if (!options.enlarge) {
      result.window_converged = true;
      break;
    }
    if (result.history.size() > 1 && std::abs(gamma - previous) <= options.window_tolerance * gamma) {
      result.window_converged = true;
      break;
    }
    if (window >= options.max_window) break;
    previous = gamma;
  }
  return result;
}

}  // namespace rydyn
