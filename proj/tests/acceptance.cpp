// Acceptance run: one pass/fail line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rydyn/atomic_data.hpp"
#include "rydyn/commands.hpp"
#include "rydyn/estimation.hpp"
#include "rydyn/kinetics.hpp"
#include "rydyn/reference.hpp"
#include "rydyn/superradiance.hpp"
#include "support/oracles.hpp"

using namespace rydyn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;  ///< 0 means no runtime bound
  std::function<Outcome()> run;
};

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rydyn_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

KineticsParams rates_28d() {
  KineticsParams p;
  p.excitation = 110.0;
  p.radiative = 4.1e4;
  p.other_radiative = 3.1e4;
  p.transfer = 1.3e5;
  p.other_loss = 265.0;
  p.load_rate = 1e8;
  p.background_loss = 1.0;
  p.black_body = 2.6e4;
  return p;
}

Outcome superradiance_scale() {
  const double v = superradiance_estimate(1e4, 50);
  return {within(v, 3e5, 0.2), "estimate " + num(v) + " s^-1 vs 3e5"};
}

Outcome cascade_counts() {
  DetectionGeometry g;
  g.branching_rydberg = 0.15;
  g.branching_6p = 0.31;
  g.efficiency = 0.034;
  g.solid_angle = 3e-3;
  const double c6 = cascade_count_rate(rates_28d(), g, 5.7e7);
  return {within(c6, 18000.0, 0.05), "c6 " + num(c6) + " s^-1 vs 18000"};
}

Outcome capture() {
  CaptureParams p;
  p.density = 1e13;
  p.c6 = c6_from_ghz_um6(540.0);
  p.temperature = 100e-6;
  const double v = capture_rate(p);
  return {within(v, 200.0, 0.3), "capture " + num(v) + " s^-1 vs 200"};
}

Outcome transfer_table() {
  const std::array<double, 4> expected = {1.7e5, 2.4e5, 1.2e5, 2.2e5};
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < kReferenceStates.size(); ++i) {
    const auto& ref = kReferenceStates[i];
    RunConfig cfg;
    cfg.set("atomic", "state", std::string(ref.label));
    cfg.set("output", "directory", scratch("cascade_" + std::to_string(i)).string());
    const auto res = cmd_cascade(cfg);
    const double gamma = std::stod(res.value("gamma_per_s"));
    const double ratio = gamma / expected[i];
    const bool ok = ratio >= 0.5 && ratio <= 2.0;
    pass = pass && ok;
    detail += (i ? "; " : "") + std::string(ref.label) + " " + num(gamma) + " (x" + num(ratio) + ", sr " +
              num(std::stod(res.value("gamma_superradiant_per_s"))) + ", bb " +
              num(std::stod(res.value("gamma_black_body_per_s"))) + ")";
  }
  return {pass, detail};
}

Outcome ionization_table() {
  fs::path dir = scratch("tables");
  RunConfig cfg;
  cfg.set("output", "directory", dir.string());
  cmd_tables(cfg);
  const std::array<double, 4> expected = {322.0, 720.0, 457.0, 265.0};
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < kReferenceStates.size(); ++i) {
    RunConfig one;
    one.set("atomic", "state", std::string(kReferenceStates[i].label));
    const double v = resolve_model(one, load_atom(one)).ionization;
    pass = pass && v == expected[i] && kReferenceStates[i].ionization == expected[i];
    detail += (i ? ", " : "") + num(v);
  }
  pass = pass && fs::exists(dir / "table_ionization.csv");
  return {pass, "Gamma_BBI " + detail};
}

Outcome steady_vs_transient() {
  std::mt19937_64 rng(1000003);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = oracle::draw_kinetics(rng);
    KineticsParams p;
    p.excitation = d.excitation;
    p.probe = d.probe;
    p.radiative = d.radiative;
    p.other_radiative = d.other_radiative;
    p.transfer = d.transfer;
    p.direct_loss = d.direct_loss;
    p.other_loss = d.other_loss;
    p.load_rate = d.load_rate;
    p.background_loss = d.background_loss;
    if (trial % 3 == 0) {
      p.dark.capacity = 0.25;
      p.dark.exchange_rate = oracle::log_uniform(rng, 1e3, 1e6);
    }
    SteadyState start;
    start.ground = p.load_rate / p.background_loss;
    const auto end = transient(p, start, 60.0 / slowest_relaxation_rate(p), 1).states.back();
    const auto ss = steady_state(p);
    const double floor = 1e-12 * ss.ground;
    auto rel = [&](double a, double b) { return std::abs(a - b) / (std::abs(b) + floor); };
    worst = std::max({worst, rel(end.ground, ss.ground), rel(end.rydberg_addressable, ss.rydberg_addressable),
                      rel(end.rydberg_dark, ss.rydberg_dark), rel(end.other, ss.other)});
  }
  return {worst <= 1e-8, "worst relative difference " + num(worst) + " over 1000 sets"};
}

Outcome dicke() {
  const double gamma = 1e3, n = 100.0;
  RateMatrix m;
  m.labels = {"l", "e"};
  m.pumped = 1;
  RatePair pair;
  pair.upper = 1;
  pair.lower = 0;
  pair.einstein_a = gamma;
  pair.gamma = gamma;
  m.pairs.push_back(pair);
  m.sink_rate = {0.0, 0.0};
  m.sink_cooperativity = {0.0, 0.0};
  const LevelPopulations start{{0.0, n}, 0.0};
  const double initial = -cascade_rhs(start, m, 0.0).levels[1] / n;
  const auto traj = evolve(start, m, 0.0, 10.0 * std::log(n) / (gamma * n), 4000);
  double peak = 0.0, drift = 0.0;
  for (const auto& s : traj.states) {
    peak = std::max(peak, collective_emission_rate(s, m));
    drift = std::max(drift, std::abs(s.total() - n) / n);
  }
  const bool pass = within(initial, gamma, 0.01) && within(peak, n * n * gamma / 4.0, 0.10) && drift <= 1e-10;
  return {pass, "initial " + num(initial) + ", peak/(N^2 G/4) " + num(peak / (n * n * gamma / 4.0)) +
                    ", population drift " + num(drift)};
}

Outcome cooperativity_oracle() {
  bool pass = cooperativity_kr(0.0) == 1.0;
  std::string detail = "C(0) " + num(cooperativity_kr(0.0));
  for (double kr : {0.5, 2.0, 10.0}) {
    const double mc = oracle::cooperativity_mc(kr, 2000, 99);
    const double c = cooperativity_kr(kr);
    pass = pass && within(c, mc, 0.01);
    detail += "; kR " + num(kr) + " " + num(c) + " vs " + num(mc);
  }
  return {pass, detail};
}

Outcome fit_round_trip() {
  KineticsParams truth = rates_28d();
  truth.black_body = 0.0;
  const DetectionGeometry g;
  const auto grid = probe_grid(1e6, 12);
  const auto fl = fit_loss_curve(synthesize_dataset(truth, g, Observable::loss, grid, {}, 1));
  const auto fc = fit_count_curve(synthesize_dataset(truth, g, Observable::counts, grid, {}, 1));
  const double loss_gamma = std::abs(fl.gamma / truth.transfer - 1.0);
  const double loss_other = std::abs(fl.other_loss / truth.other_loss - 1.0);
  const double count_gamma = std::abs(fc.gamma / truth.transfer - 1.0);
  std::vector<double> errors;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto d = synthesize_dataset(truth, g, Observable::loss, grid, {NoiseKind::gaussian, 0.05, 1.0}, seed);
    errors.push_back(std::abs(fit_loss_curve(d).gamma / truth.transfer - 1.0));
  }
  std::sort(errors.begin(), errors.end());
  const double median = 0.5 * (errors[49] + errors[50]);
  const bool pass = loss_gamma <= 1e-6 && loss_other <= 1e-6 && count_gamma <= 1e-6 && median <= 0.15;
  return {pass, "noiseless errors " + num(loss_gamma) + ", " + num(loss_other) + ", " + num(count_gamma) +
                    "; median 5% noise error " + num(median)};
}

Outcome hydrogen() {
  const auto h = RydbergAtom::hydrogen();
  const auto t = h.transition(h.level({2, 1, 3}), h.level({1, 0, 1}));
  const double from_f = oracle::einstein_a_from_f(t.omega, oracle::kHydrogenF1s2p, 2.0, 6.0);
  return {within(t.einstein_a, 6.27e8, 0.01) && within(t.einstein_a, from_f, 0.01),
          "A(2p-1s) " + num(t.einstein_a) + " s^-1, oscillator-strength value " + num(from_f)};
}

Outcome wavelengths() {
  const auto rb = RydbergAtom::rubidium87();
  const double a = rb.transition(rb.level({30, 0, 1}), rb.level({29, 1, 3})).wavelength * 100.0;
  const double b = rb.transition(rb.level({58, 2, 5}), rb.level({59, 1, 3})).wavelength * 100.0;
  return {within(a, 0.17, 0.1) && within(b, 2.8, 0.1), "30S-29P " + num(a) + " cm, 58D-59P " + num(b) + " cm"};
}

/// Last data row of a CSV file.
std::vector<double> last_row(const fs::path& p) {
  std::ifstream in(p);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') last = line;
  std::vector<double> out;
  std::stringstream ss(last);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

Outcome dark_contrast() {
  const fs::path dir = scratch("probe");
  RunConfig cfg;
  cfg.set("output", "directory", dir.string());
  cfg.set("probe", "r3_values", "0, 1e6, 1e10, 1e14");
  cfg.set("dark", "capacity", "0.2");
  const auto res = cmd_probe_scan(cfg);
  const auto tail = last_row(dir / "probe_scan.csv");
  const double r2 = resolve_model(cfg, load_atom(cfg)).kinetics.excitation;
  const double plain_tail = tail.at(1), dark_tail = tail.at(4);
  // Gamma_r = 0: nothing reaches the loss channel once the probe saturates
  const double predicted = 0.0;
  const double dark_limit = std::stod(res.value("high_probe_loss_dark_per_s"));
  const bool pass = dark_tail > 0.0 && within(dark_tail, dark_limit, 1e-3) &&
                    std::abs(plain_tail - predicted) <= 1e-6 * r2;
  return {pass, "loss at R3 = 1e14 with f_d = 0.2 " + num(dark_tail) + " s^-1 (limit " + num(dark_limit) +
                    "), with f_d = 0 " + num(plain_tail) + " s^-1"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"superradiance estimate", 1.0, superradiance_scale},
      {"cascade count rate", 1.0, cascade_counts},
      {"capture rate", 1.0, capture},
      {"transfer-rate comparison", 300.0, transfer_table},
      {"black-body ionization lookup", 0.0, ionization_table},
      {"steady state vs transient", 60.0, steady_vs_transient},
      {"Dicke two-level properties", 10.0, dicke},
      {"cooperativity vs Monte Carlo", 60.0, cooperativity_oracle},
      {"fit round trip", 60.0, fit_round_trip},
      {"hydrogenic limit", 0.0, hydrogen},
      {"wavelength anchors", 0.0, wavelengths},
      {"dark-state contrast", 0.0, dark_contrast},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && elapsed > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + num(c.budget_s) + " s budget";
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %zu. %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.name.c_str(), o.detail.c_str(),
                elapsed);
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}
