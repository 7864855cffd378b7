#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rydyn/constants.hpp"
#include "rydyn/errors.hpp"
#include "rydyn/superradiance.hpp"
#include "support/oracles.hpp"

using namespace rydyn;
using doctest::Approx;

namespace {

const RydbergAtom& rb() {
  static const RydbergAtom atom = RydbergAtom::rubidium87();
  return atom;
}

/// Closed two-level system with a single collective channel.
RateMatrix two_level(double gamma) {
  RateMatrix m;
  m.labels = {"l", "e"};
  m.pumped = 1;
  RatePair p;
  p.upper = 1;
  p.lower = 0;
  p.einstein_a = gamma;
  p.gamma = gamma;
  m.pairs.push_back(p);
  m.sink_rate = {0.0, 0.0};
  m.sink_cooperativity = {0.0, 0.0};
  return m;
}

const RateMatrix& small_28d() {
  static const RateMatrix m = [] {
    const auto basis = LevelBasis::window(rb(), {28, 2, 5}, 2, 3);
    return build_rates(rb(), basis, CloudGeometry{0.5e-3});
  }();
  return m;
}

/// Linear cascade (collective products dropped) assembled independently and
/// solved by Householder QR.
Eigen::VectorXd linear_oracle(const RateMatrix& m, double pump) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : m.pairs) {
    const auto u = static_cast<Eigen::Index>(p.upper), l = static_cast<Eigen::Index>(p.lower);
    const double down = p.gamma + p.stimulated_down;
    a(u, u) -= down;
    a(l, u) += down;
    a(l, l) -= p.absorption_up;
    a(u, l) += p.absorption_up;
  }
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) -= m.sink_rate[static_cast<std::size_t>(i)];
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(static_cast<Eigen::Index>(m.pumped)) = -pump;
  return a.householderQr().solve(b);
}

}  // namespace

TEST_CASE("cooperativity") {
  CHECK(cooperativity_kr(0.0) == 1.0);
  CHECK(cooperativity(3.0, 1e-9) == Approx(1.0).epsilon(1e-15));
  CHECK(cooperativity_kr(1e4) < 1e-10);
  {
    // series branch against the closed form in extended precision
    const long double x = 0.999e-3L;
    const long double form = 3.0L * (std::sin(x) - x * std::cos(x)) / (x * x * x);
    CHECK(cooperativity_kr(0.999e-3) == Approx(static_cast<double>(form * form)).epsilon(1e-9));
    CHECK(std::abs(cooperativity_kr(1.001e-3) - cooperativity_kr(0.999e-3)) < 2e-9);
  }
  for (double x = 0.0; x < 50.0; x += 0.013) {
    const double c = cooperativity_kr(x);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
  CHECK_THROWS_AS(cooperativity(1.0, 0.0), DomainError);
}

TEST_CASE("cooperativity against the Monte-Carlo double integral") {
  for (double kr : {0.5, 2.0, 10.0}) {
    CAPTURE(kr);
    const double mc = oracle::cooperativity_mc(kr, 2000, 99);
    CHECK(cooperativity_kr(kr) == Approx(mc).epsilon(0.01));
  }
}

TEST_CASE("superradiance_estimate") {
  const double base = superradiance_estimate(1e4, 50);
  CHECK(base == Approx(3e5).epsilon(0.2));
  CHECK(superradiance_estimate(1.0, 50) == Approx(base / 1e4).epsilon(1e-14));
  CHECK(superradiance_estimate(1e4, 28) == Approx(base * std::pow(50.0 / 28.0, 5)).epsilon(1e-13));
  CHECK_THROWS_AS(superradiance_estimate(0.0, 50), DomainError);
}

TEST_CASE("level basis") {
  const auto basis = LevelBasis::window(rb(), {28, 2, 5}, 2, 3);
  CHECK(basis.contains({28, 2, 5}));
  CHECK(basis.levels[basis.pumped].state == StateLabel{28, 2, 5});
  for (std::size_t i = 1; i < basis.size(); ++i) CHECK(basis.levels[i - 1].energy <= basis.levels[i].energy);
  for (const auto& lv : basis.levels) {
    CHECK(std::abs(lv.n() - 28) <= 2);
    CHECK(lv.l() <= 3);
  }
  CHECK_THROWS_AS(basis.index_of({40, 0, 1}), DomainError);
}

TEST_CASE("build_rates") {
  SUBCASE("small cloud gives the single-atom rate") {
    LevelBasis basis;
    basis.levels = {rb().level({29, 1, 3}), rb().level({30, 0, 1})};
    basis.pumped = 1;
    const auto m = build_rates(rb(), basis, CloudGeometry{1e-9});
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].gamma == Approx(m.pairs[0].einstein_a).epsilon(1e-10));
    const auto t = rb().transition(basis.levels[1], basis.levels[0]);
    CHECK(m.pairs[0].einstein_a == Approx(t.einstein_a).epsilon(1e-14));
  }
  SUBCASE("30S-29P at R = 0.5 mm") {
    LevelBasis basis;
    basis.levels = {rb().level({29, 1, 3}), rb().level({30, 0, 1})};
    basis.pumped = 1;
    const auto m = build_rates(rb(), basis, CloudGeometry{0.5e-3});
    const double c = m.pairs[0].cooperativity;
    CHECK(c > 0.0);
    CHECK(c < 1.0);
    const double kr = m.pairs[0].omega / constants::speed_of_light * 0.5e-3;
    CHECK(c == Approx(oracle::cooperativity_mc(kr, 1000, 3)).epsilon(0.01));
    CHECK(m.pairs[0].gamma <= m.pairs[0].einstein_a);
  }
  SUBCASE("zero temperature") {
    const auto basis = LevelBasis::window(rb(), {28, 2, 5}, 1, 3);
    const auto m = build_rates(rb(), basis, CloudGeometry{0.5e-3}, 0.0);
    for (const auto& p : m.pairs) {
      CHECK(p.stimulated_down == 0.0);
      CHECK(p.absorption_up == 0.0);
    }
  }
  SUBCASE("parallel equals serial") {
    const auto basis = LevelBasis::window(rb(), {43, 2, 5}, 2, 4);
    const auto a = build_rates(rb(), basis, CloudGeometry{0.5e-3});
    const auto b = build_rates_serial(rb(), basis, CloudGeometry{0.5e-3});
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(a.pairs[i].gamma == b.pairs[i].gamma);
      CHECK(a.pairs[i].stimulated_down == b.pairs[i].stimulated_down);
    }
    CHECK(a.sink_rate == b.sink_rate);
  }
  SUBCASE("empty basis") { CHECK_THROWS_AS(build_rates(rb(), LevelBasis{}, CloudGeometry{}), DomainError); }
}

TEST_CASE("cascade_rhs") {
  const auto m = two_level(50.0);
  LevelPopulations zero{{0.0, 0.0}, 0.0};
  const auto d0 = cascade_rhs(zero, m, 0.0);
  CHECK(d0.levels[0] == 0.0);
  CHECK(d0.levels[1] == 0.0);

  LevelPopulations inverted{{0.0, 100.0}, 0.0};
  CHECK(cascade_rhs(inverted, m, 0.0).levels[1] == Approx(-50.0 * 100.0).epsilon(1e-15));

  const double n = 1e4;
  LevelPopulations half{{n / 2, n / 2}, 0.0};
  CHECK(collective_emission_rate(half, m) == Approx(50.0 * n * n / 4.0).epsilon(1e-3));

  LevelPopulations negative{{-1.0, 3.0}, 0.0};
  CHECK_THROWS_AS(cascade_rhs(negative, m, 0.0), DomainError);

  // Population balance: pump in, sink out.
  const auto& real = small_28d();
  LevelPopulations pops;
  pops.levels.assign(real.size(), 0.0);
  for (std::size_t i = 0; i < real.size(); ++i) pops.levels[i] = 10.0 * (i % 7);
  const auto d = cascade_rhs(pops, real, 1e5);
  double sum = 0.0, sink = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    sum += d.levels[i];
    sink += real.sink_rate[i] * pops.levels[i];
  }
  CHECK(sum == Approx(1e5 - sink).epsilon(1e-10));
  CHECK(d.sink == Approx(sink).epsilon(1e-12));
}

TEST_CASE("two-level Dicke pulse") {
  const double gamma = 1e3, n = 100.0;
  const auto m = two_level(gamma);
  const LevelPopulations start{{0.0, n}, 0.0};
  CHECK(-cascade_rhs(start, m, 0.0).levels[1] / n == Approx(gamma).epsilon(1e-12));

  const double delay = std::log(n) / (gamma * n);
  const auto traj = evolve(start, m, 0.0, 10.0 * delay, 4000);
  double peak = 0.0, t_peak = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double r = collective_emission_rate(traj.states[i], m);
    if (r > peak) {
      peak = r;
      t_peak = traj.times[i];
    }
    CHECK(traj.states[i].total() == Approx(n).epsilon(1e-10));
  }
  CHECK(peak == Approx(n * n * gamma / 4.0).epsilon(0.10));
  CHECK(t_peak == Approx(delay).epsilon(0.5));
  CHECK(traj.states.back().levels[1] < 0.01 * n);
  CHECK(traj.times.back() < 0.5 / gamma);
}

TEST_CASE("closed evolution conserves population") {
  const auto& m = small_28d();
  LevelPopulations start;
  start.levels.assign(m.size(), 0.0);
  start.levels[m.pumped] = 1e4;
  const auto traj = evolve(start, m, 0.0, 2e-4, 20);
  for (const auto& s : traj.states) CHECK(s.total() == Approx(1e4).epsilon(1e-10));
}

TEST_CASE("steady_state_pumped") {
  const auto& m = small_28d();
  SUBCASE("no pump") {
    const auto s = steady_state_pumped(m, 0.0);
    for (double v : s.levels) CHECK(v == 0.0);
  }
  SUBCASE("linear regime") {
    const double pump = 1e-2;
    const auto s = steady_state_pumped(m, pump);
    const auto lin = linear_oracle(m, pump);
    const double top = lin.maxCoeff();
    for (std::size_t i = 0; i < m.size(); ++i)
      if (lin(static_cast<Eigen::Index>(i)) > 1e-6 * top)
        CHECK(s.levels[i] == Approx(lin(static_cast<Eigen::Index>(i))).epsilon(0.01));
  }
  SUBCASE("long-time evolution reaches the steady state") {
    const double pump = 3e8;
    SteadyStateReport report;
    const auto s = steady_state_pumped(m, pump, {}, &report);
    CHECK(report.residual < 1e-10 * pump);
    LevelPopulations start;
    start.levels.assign(m.size(), 0.0);
    const auto end = evolve(start, m, pump, 0.2, 1).states.back();
    const double top = *std::max_element(s.levels.begin(), s.levels.end());
    for (std::size_t i = 0; i < m.size(); ++i)
      CHECK(std::abs(end.levels[i] - s.levels[i]) <= 1e-6 * s.levels[i] + 1e-9 * top);
  }
}

TEST_CASE("effective transfer rate") {
  SUBCASE("single atom without collective enhancement") {
    const auto& m = small_28d();
    LevelPopulations pops;
    pops.levels.assign(m.size(), 0.0);
    pops.levels[m.pumped] = 1.0;
    double sr = 0.0, bb = 0.0;
    for (const auto& p : m.pairs) {
      if (p.upper == m.pumped) {
        sr += p.gamma;
        bb += p.stimulated_down;
      }
      if (p.lower == m.pumped) bb += p.absorption_up;
    }
    const auto t = effective_transfer_rate(pops, m);
    CHECK(t.superradiant == Approx(sr).epsilon(1e-13));
    CHECK(t.black_body == Approx(bb).epsilon(1e-13));
  }
  SUBCASE("grows with the pump") {
    const auto& m = small_28d();
    double previous = 0.0;
    for (double pump : {1e6, 1e8, 1e9, 4e9}) {
      const double g = effective_transfer_rate(steady_state_pumped(m, pump), m).total();
      CHECK(g > previous);
      previous = g;
    }
  }
}

TEST_CASE("self-consistent 28D cascade population") {
  KineticsParams k;
  k.excitation = 110.0;
  k.radiative = 4.1e4;
  k.other_radiative = 3.1e4;
  k.other_loss = 265.0;
  k.transfer = 1.3e5;
  k.load_rate = 1e8;
  k.background_loss = 1.0;
  CascadeOptions o;
  o.enlarge = false;
  const auto r = solve_cascade(rb(), {28, 2, 5}, k, o);
  const double nr = r.solution.populations.levels[r.rates.pumped];
  CHECK(nr > 1e3);
  CHECK(nr < 1e5);
  // gamma is a fixed point of the coupling
  KineticsParams q = k;
  q.transfer = r.solution.transfer.total();
  CHECK(r.solution.pump == Approx(q.excitation * steady_state(q).ground).epsilon(1e-3));
}
