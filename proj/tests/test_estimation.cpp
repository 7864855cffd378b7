#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rydyn/constants.hpp"
#include "rydyn/errors.hpp"
#include "rydyn/estimation.hpp"
#include "support/oracles.hpp"

using namespace rydyn;
using doctest::Approx;

namespace {

KineticsParams truth_28d(double gamma = 1.3e5) {
  KineticsParams p;
  p.excitation = 110.0;
  p.radiative = 4.1e4;
  p.other_radiative = 3.1e4;
  p.transfer = gamma;
  p.other_loss = 265.0;
  p.load_rate = 1e8;
  p.background_loss = 1.0;
  return p;
}

KineticsParams random_truth(std::mt19937_64& rng) {
  KineticsParams p;
  p.excitation = oracle::log_uniform(rng, 30.0, 500.0);
  p.radiative = oracle::log_uniform(rng, 4e3, 5e4);
  p.other_radiative = oracle::log_uniform(rng, 5e3, 4e4);
  p.transfer = oracle::log_uniform(rng, 1e4, 6e5);
  p.other_loss = oracle::log_uniform(rng, 50.0, 800.0);
  p.load_rate = 1e8;
  p.background_loss = 1.0;
  return p;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("noiseless loss round trip") {
  const auto d = synthesize_dataset(truth_28d(), {}, Observable::loss, probe_grid(1e6, 12), {}, 1);
  const auto f = fit_loss_curve(d);
  CHECK(f.converged);
  CHECK(f.gamma == Approx(1.3e5).epsilon(1e-6));
  CHECK(f.other_loss == Approx(265.0).epsilon(1e-6));
  CHECK(f.value("gamma") == f.gamma);
  CHECK_THROWS_AS(f.value("nonsense"), DomainError);
  // covariance symmetric and positive semi-definite
  CHECK((f.covariance - f.covariance.transpose()).norm() <= 1e-12 * f.covariance.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.covariance);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().maxCoeff());
}

TEST_CASE("noiseless count round trip") {
  const DetectionGeometry g;
  const auto truth = truth_28d(1.2e5);
  const auto d = synthesize_dataset(truth, g, Observable::counts, probe_grid(1e6, 12), {}, 1);
  const auto f = fit_count_curve(d);
  CHECK(f.converged);
  CHECK(f.gamma == Approx(1.2e5).epsilon(1e-6));
  CHECK(f.amplitude == Approx(truth.excitation * g.product()).epsilon(1e-6));
}

TEST_CASE("randomised noiseless round trips") {
  std::mt19937_64 rng(2718);
  const DetectionGeometry g;
  for (int trial = 0; trial < 100; ++trial) {
    const auto truth = random_truth(rng);
    const auto grid = probe_grid(5.0 * (truth.radiative + truth.transfer), 15);
    CAPTURE(trial);
    const auto fl = fit_loss_curve(synthesize_dataset(truth, g, Observable::loss, grid, {}, 0));
    CHECK(fl.gamma == Approx(truth.transfer).epsilon(1e-6));
    CHECK(fl.other_loss == Approx(truth.other_loss).epsilon(1e-6));
    const auto fc = fit_count_curve(synthesize_dataset(truth, g, Observable::counts, grid, {}, 0));
    CHECK(fc.gamma == Approx(truth.transfer).epsilon(1e-6));
  }
}

TEST_CASE("5% noise, 12 points") {
  std::vector<double> errors;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto d = synthesize_dataset(truth_28d(), {}, Observable::loss, probe_grid(1e6, 12),
                                      {NoiseKind::gaussian, 0.05, 1.0}, seed);
    errors.push_back(std::abs(fit_loss_curve(d).gamma / 1.3e5 - 1.0));
  }
  CHECK(median(errors) <= 0.15);
}

TEST_CASE("estimator bias shrinks with the noise") {
  std::vector<double> bias;
  for (double sigma : {0.10, 0.05, 0.01}) {
    double sum = 0.0;
    std::vector<double> abs_err;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      const auto d = synthesize_dataset(truth_28d(), {}, Observable::loss, probe_grid(1e6, 25),
                                        {NoiseKind::gaussian, sigma, 1.0}, seed);
      const double e = fit_loss_curve(d).gamma / 1.3e5 - 1.0;
      sum += e;
      abs_err.push_back(std::abs(e));
    }
    bias.push_back(median(abs_err));
    CAPTURE(sigma);
    CHECK(std::abs(sum / 200.0) < 2.0 * sigma);
  }
  CHECK(bias[1] < bias[0]);
  CHECK(bias[2] < bias[1]);
  CHECK(bias[2] < 0.02);
}

TEST_CASE("loss and count fits agree") {
  const DetectionGeometry g;
  int agree = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const auto seed = static_cast<std::uint64_t>(t);
    const auto grid = probe_grid(1e6, 12);
    const auto fl = fit_loss_curve(
        synthesize_dataset(truth_28d(), g, Observable::loss, grid, {NoiseKind::gaussian, 0.05, 1.0}, 2 * seed));
    const auto fc = fit_count_curve(
        synthesize_dataset(truth_28d(), g, Observable::counts, grid, {NoiseKind::gaussian, 0.05, 1.0}, 2 * seed + 1));
    // the two 1-sigma intervals overlap
    if (std::abs(fl.gamma - fc.gamma) <= fl.error("gamma") + fc.error("gamma")) ++agree;
  }
  MESSAGE("interval overlap in " << agree << " of " << trials);
  CHECK(agree >= 0.9 * trials);
}

TEST_CASE("reported uncertainties are calibrated") {
  const DetectionGeometry g;
  int loss_cover = 0, count_cover = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    const auto seed = static_cast<std::uint64_t>(1000 + t);
    const auto grid = probe_grid(1e6, 12);
    const auto fl = fit_loss_curve(
        synthesize_dataset(truth_28d(), g, Observable::loss, grid, {NoiseKind::gaussian, 0.05, 1.0}, 2 * seed));
    const auto fc = fit_count_curve(
        synthesize_dataset(truth_28d(), g, Observable::counts, grid, {NoiseKind::gaussian, 0.05, 1.0}, 2 * seed + 1));
    if (std::abs(fl.gamma - 1.3e5) <= fl.error("gamma")) ++loss_cover;
    if (std::abs(fc.gamma - 1.3e5) <= fc.error("gamma")) ++count_cover;
  }
  // Gaussian 1-sigma coverage is 68.3%; binomial spread over 400 trials is 2.3%.
  CHECK(loss_cover / double(trials) == Approx(0.683).epsilon(0.12));
  CHECK(count_cover / double(trials) == Approx(0.683).epsilon(0.12));
}

TEST_CASE("fit modes") {
  SUBCASE("dark fraction") {
    auto truth = truth_28d();
    truth.dark.capacity = 0.1;
    truth.dark.exchange_rate = 1e5;
    const auto d = synthesize_dataset(truth, {}, Observable::loss, probe_grid(1e6, 20), {}, 0);
    const auto f = fit_loss_curve(d, {FitMode::dark});
    CHECK(f.dark_fraction == Approx(0.1).epsilon(1e-5));
    CHECK(f.gamma == Approx(1.3e5).epsilon(1e-5));
  }
  SUBCASE("combined loss parameter") {
    auto truth = truth_28d();
    truth.direct_loss = 20.0;
    const auto d = synthesize_dataset(truth, {}, Observable::loss, probe_grid(1e6, 12), {}, 0);
    const auto f = fit_loss_curve(d, {FitMode::combined});
    const double combination = 1.3e5 * 265.0 / 3.1e4 + 20.0;
    CHECK(f.loss_combination == Approx(combination).epsilon(1e-6));
  }
  SUBCASE("counts accept only the standard mode") {
    const auto d = synthesize_dataset(truth_28d(), {}, Observable::counts, probe_grid(1e6, 12), {}, 0);
    CHECK_THROWS_AS(fit_count_curve(d, {FitMode::dark}), DomainError);
  }
}

TEST_CASE("degenerate and malformed datasets") {
  auto d = synthesize_dataset(truth_28d(), {}, Observable::loss, probe_grid(1e6, 12), {}, 0);
  auto same = d;
  for (auto& s : same.samples) s.r3 = 5e4;
  CHECK_THROWS_AS(fit_loss_curve(same), DomainError);
  auto few = d;
  few.samples.resize(3);
  CHECK_THROWS_AS(fit_loss_curve(few), DomainError);
  auto zero_sigma = d;
  zero_sigma.samples[2].sigma = 0.0;
  CHECK_THROWS_AS(fit_loss_curve(zero_sigma), DomainError);
  CHECK_THROWS_AS(fit_count_curve(d), DomainError);
}

TEST_CASE("unit weights are flagged") {
  auto d = synthesize_dataset(truth_28d(), {}, Observable::loss, probe_grid(1e6, 12), {}, 0);
  d.has_sigma = false;
  for (auto& s : d.samples) s.sigma = 1.0;
  const auto f = fit_loss_curve(d);
  REQUIRE(!f.warnings.empty());
  CHECK(f.warnings.front().find("unit weights") != std::string::npos);
  CHECK(f.gamma == Approx(1.3e5).epsilon(1e-6));
}

TEST_CASE("batch fitting") {
  std::vector<ProbeScanDataset> sets;
  for (std::uint64_t seed = 0; seed < 24; ++seed)
    sets.push_back(synthesize_dataset(truth_28d(), {}, seed % 2 ? Observable::counts : Observable::loss,
                                      probe_grid(1e6, 12), {NoiseKind::gaussian, 0.05, 1.0}, seed));
  const auto a = fit_batch(sets);
  const auto b = fit_batch_serial(sets);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gamma == b[i].gamma);
    CHECK(a[i].chi_square == b[i].chi_square);
  }
}

TEST_CASE("synthesize_dataset") {
  const auto grid = probe_grid(1e6, 12);
  SUBCASE("noiseless values are the model") {
    const auto d = synthesize_dataset(truth_28d(), {}, Observable::loss, grid, {}, 0);
    for (const auto& s : d.samples) {
      auto p = truth_28d();
      p.probe = s.r3;
      CHECK(s.value == trap_loss_increase(p));
    }
  }
  SUBCASE("same seed, same data") {
    const NoiseModel noise{NoiseKind::gaussian, 0.05, 1.0};
    const auto a = synthesize_dataset(truth_28d(), {}, Observable::loss, grid, noise, 42);
    const auto b = synthesize_dataset(truth_28d(), {}, Observable::loss, grid, noise, 42);
    const auto c = synthesize_dataset(truth_28d(), {}, Observable::loss, grid, noise, 43);
    bool differs = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(a.samples[i].value == b.samples[i].value);
      differs = differs || a.samples[i].value != c.samples[i].value;
    }
    CHECK(differs);
  }
  SUBCASE("poisson statistics") {
    const DetectionGeometry g;
    auto p = truth_28d();
    p.probe = grid[6];
    const double rate = probe_count_rate(p, g);
    const double exposure = 2e4 / rate;  // about 2e4 counts per point
    std::vector<double> values;
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
      values.push_back(synthesize_dataset(truth_28d(), g, Observable::counts, grid,
                                          {NoiseKind::poisson, 0.05, exposure}, seed)
                           .samples[6]
                           .value);
    double mean = 0.0, var = 0.0;
    for (double v : values) mean += v / 1000.0;
    for (double v : values) var += (v - mean) * (v - mean) / 999.0;
    const double mean_counts = mean * exposure;
    CHECK(std::sqrt(var) / mean == Approx(1.0 / std::sqrt(mean_counts)).epsilon(0.10));
  }
  SUBCASE("poisson needs counts") {
    CHECK_THROWS_AS(synthesize_dataset(truth_28d(), {}, Observable::loss, grid, {NoiseKind::poisson, 0.05, 1.0}, 0),
                    DomainError);
  }
}

TEST_CASE("capture rate") {
  CaptureParams p;
  p.density = 1e13;
  p.c6 = c6_from_ghz_um6(540.0);
  p.temperature = 100e-6;
  const double base = capture_rate(p);
  CHECK(base > 0.0);
  // written out independently
  const double kb = 1.380649e-23, h = 6.62607015e-34, m = 86.909180527 * 1.66053906660e-27;
  const double c6 = 540.0 * 1e9 * h * 1e-36;
  const double expected = 1e13 * std::sqrt(3.0 * kb * 100e-6 / m) * M_PI * std::cbrt(c6 / (kb * 100e-6));
  CHECK(base == Approx(expected).epsilon(1e-9));

  CaptureParams twice = p;
  twice.density *= 2.0;
  CHECK(capture_rate(twice) == Approx(2.0 * base).epsilon(1e-15));
  CaptureParams none = p;
  none.c6 = 0.0;
  CHECK(capture_rate(none) == 0.0);
  for (double t : {1e-6, 1e-5, 1e-4, 1e-3}) {
    CaptureParams q = p;
    q.temperature = t;
    CHECK(capture_rate(q) == Approx(base * std::pow(t / 100e-6, 1.0 / 6.0)).epsilon(1e-12));
  }
  CaptureParams mean_speed = p;
  mean_speed.speed = SpeedConvention::mean;
  CHECK(capture_rate(mean_speed) == Approx(base * std::sqrt(8.0 / (3.0 * M_PI))).epsilon(1e-12));
  CaptureParams bad = p;
  bad.density = 0.0;
  CHECK_THROWS_AS(capture_rate(bad), DomainError);
}

TEST_CASE("boltzmann_suppression") {
  CHECK(boltzmann_suppression(0.0, 1e-4) == 1.0);
  const double kt = constants::boltzmann * 1e-4;
  CHECK(boltzmann_suppression(kt * std::log(100.0), 1e-4) == Approx(1e-2).epsilon(1e-12));
  CHECK_THROWS_AS(boltzmann_suppression(1.0, 0.0), DomainError);
}

TEST_CASE("electron_steady") {
  CHECK(electron_steady(4e6, 1e4) == Approx(400.0).epsilon(1e-15));
  CHECK(electron_steady(0.0, 1e4) == 0.0);
  CHECK(electron_steady(8e6, 1e4) == Approx(2.0 * electron_steady(4e6, 1e4)).epsilon(1e-15));
  CHECK_THROWS_AS(electron_steady(1.0, 0.0), DomainError);
}
