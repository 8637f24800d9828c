#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "ctrace/digital.hpp"
#include "ctrace/error.hpp"
#include "ctrace/rng.hpp"
#include "ctrace/stats.hpp"

using namespace ctrace;

namespace {

Params make(double beta, double gamma, double delta, double pi) {
  Params p;
  p.beta = beta;
  p.gamma = gamma;
  p.delta = delta;
  p.pi = pi;
  return p;
}

// Oracle: enumerate every birth/recovery/diagnosis path of k jumps from
// size 1 and add up the probability of those still alive.
double alive_after_paths(const Params& params, int k) {
  const double up = params.beta * params.pi, down = params.gamma, kill = params.delta;
  const double total = up + down + kill;
  std::function<double(int, int)> go = [&](int size, int steps) -> double {
    if (size == 0) return 0.0;
    if (steps == 0) return 1.0;
    // A diagnosis ends the component, so that branch contributes nothing.
    return up / total * go(size + 1, steps - 1) + down / total * go(size - 1, steps - 1);
  };
  return go(1, k);
}

// Oracle: propagate the size distribution jump by jump and sum survival
// probabilities, E[N_c] = sum_{k>=0} P(N_c > k).
double expected_jumps_dp(const Params& params) {
  const double up = params.beta * params.pi, down = params.gamma, kill = params.delta;
  const double total = up + down + kill;
  std::vector<double> mass{0.0, 1.0};
  double sum = 1.0;
  for (int k = 1; k < 200000; ++k) {
    std::vector<double> next(mass.size() + 1, 0.0);
    for (std::size_t s = 1; s < mass.size(); ++s) {
      next[s + 1] += mass[s] * up / total;
      next[s - 1] += mass[s] * down / total;
    }
    next[0] = 0;
    double alive = 0;
    for (double m : next) alive += m;
    sum += alive;
    mass.swap(next);
    if (alive < 1e-15) break;
  }
  return sum;
}

double largest_root_bisection(double m11, double m12, double m21, double m22) {
  auto f = [&](double x) { return (x - m11) * (x - m22) - m12 * m21; };
  double lo = std::max(m11, m22);
  double hi = lo + 1;
  while (f(hi) < 0) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (f(mid) > 0 ? hi : lo) = mid;
  }
  return (lo + hi) / 2;
}

const Params kTable2 = make(0.8, 1.0 / 7, 1.0 / 7, 2.0 / 3);

}  // namespace

TEST_CASE("tail_prob_jumps: no app growth means exactly one jump") {
  for (int k : {1, 2, 5, 40}) CHECK(tail_prob_jumps(k, make(6.0 / 7, 1.0 / 7, 1.0 / 7, 0.0)) == 0.0);
}

TEST_CASE("tail_prob_jumps: single jump") {
  CHECK(tail_prob_jumps(1, make(6.0 / 7, 1.0 / 7, 1.0 / 7, 0.5)) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("tail_prob_jumps matches exhaustive path enumeration") {
  const Params cases[] = {make(6.0 / 7, 1.0 / 7, 0.0, 0.5), make(6.0 / 7, 1.0 / 7, 1.0 / 7, 0.5),
                          make(0.8, 1.0 / 7, 1.0 / 7, 2.0 / 3), make(0.3, 0.5, 0.05, 0.9),
                          make(2.0, 0.2, 1.0, 0.1)};
  for (const auto& p : cases)
    for (int k = 1; k <= 12; ++k) {
      CAPTURE(k);
      CHECK(tail_prob_jumps(k, p) == doctest::Approx(alive_after_paths(p, k)).epsilon(1e-12));
    }
  // k = 4 with no diagnosis: paths UUUU, UUUD, UUDU, UUDD, UDUU, UDUD survive.
  const Params p = make(6.0 / 7, 1.0 / 7, 0.0, 0.5);
  const double q = 0.75;
  const double by_hand = q * q * q * q + 3 * q * q * q * (1 - q) + 2 * q * q * (1 - q) * (1 - q);
  CHECK(tail_prob_jumps(4, p) == doctest::Approx(by_hand).epsilon(1e-14));
}

TEST_CASE("tail_prob_jumps bounds and monotonicity") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Params p = make(2 * rng.uniform(), 0.05 + rng.uniform(), rng.uniform(), rng.uniform());
    const double up = p.beta * p.pi;
    const double r = (up + p.gamma) / (up + p.gamma + p.delta);
    double prev = 1;
    for (int k = 1; k <= 60; ++k) {
      const double t = tail_prob_jumps(k, p);
      CHECK(t >= 0);
      CHECK(t <= 1);
      CHECK(t <= prev + 1e-15);
      CHECK(t <= std::pow(r, k) * (1 + 1e-12));
      prev = t;
    }
  }
}

TEST_CASE("expected_jumps edge cases and errors") {
  CHECK(expected_jumps(make(0.8, 1.0 / 7, 1.0 / 7, 0.0)) == 1.0);

  CHECK_THROWS_WITH_AS(expected_jumps(make(6.0 / 7, 1.0 / 7, 0.0, 0.5)), doctest::Contains("E[N_c] diverges"),
                       Error);
  try {
    expected_jumps(make(6.0 / 7, 1.0 / 7, 0.0, 0.5));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SeriesDivergent);
  }

  SeriesControl tiny;
  tiny.kmax = 3;
  try {
    expected_jumps(kTable2, tiny);
    FAIL("expected cap error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SeriesCapReached);
  }

  // Heavy diagnosis: the first jump is almost surely a diagnosis.
  const double e = expected_jumps(make(6.0 / 7, 1.0 / 7, 100.0, 1.0));
  CHECK(e > 1);
  CHECK(e - 1 < 0.02);
}

TEST_CASE("expected_jumps agrees with the size-distribution DP") {
  for (const auto& p : {kTable2, make(6.0 / 7, 1.0 / 7, 1.0 / 7, 0.5), make(6.0 / 7, 1.0 / 7, 1.0 / 28, 0.9),
                        make(0.3, 0.5, 0.05, 0.9)}) {
    CHECK(expected_jumps(p) == doctest::Approx(expected_jumps_dp(p)).epsilon(1e-9));
  }
}

TEST_CASE("expected_jumps without diagnosis equals the hitting time 1/(1-2q)") {
  for (double pi : {0.05, 0.1, 0.15}) {
    const Params p = make(6.0 / 7, 1.0 / 7, 0.0, pi);
    const double q = p.beta * pi / (p.beta * pi + p.gamma);
    const SeriesSum s = expected_jumps_series(p);
    CHECK(s.value == doctest::Approx(1 / (1 - 2 * q)).epsilon(1e-9));
    CHECK(s.tail_bound < 1e-10);
  }
}

TEST_CASE("series truncation is stable in the tolerance") {
  SeriesControl tight;
  tight.tol = 1e-14;
  for (double tf : {0.01, 0.1, 0.5}) {
    Params p = with_testing_fraction(make(6.0 / 7, 1.0 / 7, 0, 0.8), tf);
    const SeriesSum loose = expected_jumps_series(p);
    CHECK(std::abs(loose.value - expected_jumps(p, tight)) <= 1e-10);
    CHECK(loose.tail_bound < 1e-10);
  }
}

TEST_CASE("mean_infections_per_jump") {
  CHECK(mean_infections_per_jump(make(0.8, 1.0 / 7, 1.0 / 7, 1.0)) == 0.0);
  CHECK(mean_infections_per_jump(make(0.0, 1.0 / 7, 1.0 / 7, 0.3)) == 0.0);

  // Monte Carlo: the number of non-app infections during an inter-jump
  // interval has the same mean at every component size.
  const Params p = make(6.0 / 7, 1.0 / 7, 1.0 / 7, 2.0 / 3);
  const double s = p.beta * p.pi + p.gamma + p.delta;
  Rng rng(17);
  Moments<1> m;
  for (int i = 0; i < 200000; ++i) {
    const double k = 1 + static_cast<double>(rng.below(20));
    const double tau = rng.exponential(k * s);
    m.add({static_cast<double>(rng.poisson(k * p.beta * (1 - p.pi) * tau))});
  }
  CHECK(std::abs(m.mean(0) - mean_infections_per_jump(p)) < 3 * m.se(0));
}

TEST_CASE("offspring_matrix_digital special cases") {
  const Params none = make(0.8, 1.0 / 7, 1.0 / 7, 0.0);
  const auto m0 = offspring_matrix_digital(none);
  CHECK(m0.m11() == 0);
  CHECK(m0.m21() == 0);
  CHECK(m0.m12() == doctest::Approx(r0(none)));
  CHECK(m0.m22() == doctest::Approx(r0(none)));

  const Params all = make(0.8, 1.0 / 7, 1.0 / 7, 1.0);
  const auto m1 = offspring_matrix_digital(all);
  CHECK(m1.m12() == 0);
  CHECK(m1.m22() == 0);
  CHECK(m1.m21() == doctest::Approx(r0(all)));
  CHECK(m1.provenance[0][1] == Provenance::SeriesTruncated);
  CHECK(m1.provenance[1][0] == Provenance::Exact);
}

TEST_CASE("R_D reproduces the published value") {
  CHECK(std::abs(r_component_digital(kTable2) - 2.20) <= 0.005);
  const Params none = make(0.8, 1.0 / 7, 1.0 / 7, 0.0);
  CHECK(r_component_digital(none) == doctest::Approx(r0(none)).epsilon(1e-14));
}

TEST_CASE("spectral_radius_2x2") {
  CHECK(spectral_radius_2x2(2.0, 0, 0, 3.0) == 3.0);
  CHECK(spectral_radius_2x2(4.0, 0, 0, 1.5) == 4.0);
  CHECK(spectral_radius_2x2(0, 2, 0.5, 0) == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const double a = 3 * rng.uniform(), b = 3 * rng.uniform(), c = 3 * rng.uniform(), d = 3 * rng.uniform();
    const double lambda = spectral_radius_2x2(a, b, c, d);
    CHECK(lambda == doctest::Approx(largest_root_bisection(a, b, c, d)).epsilon(1e-10));
    const double residual = lambda * lambda - (a + d) * lambda + (a * d - b * c);
    CHECK(std::abs(residual) <= 1e-10 * std::max(1.0, lambda * lambda));
    CHECK(lambda >= std::max(a, d));
  }
}

TEST_CASE("digital matrix invariants over a parameter grid") {
  for (double beta : {0.2, 0.8, 6.0 / 7, 2.0})
    for (double tf : {0.05, 0.2, 0.5, 0.8})
      for (double pi : {0.0, 0.1, 0.4, 2.0 / 3, 1.0}) {
        const Params p = with_testing_fraction(make(beta, 1.0 / 7, 0, pi), tf);
        const auto m = offspring_matrix_digital(p);
        CHECK(m.m11() == 0);
        CHECK(m.m21() + m.m22() == doctest::Approx(r0(p)).epsilon(1e-12));
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            CHECK(std::isfinite(m(i, j)));
            CHECK(m(i, j) >= 0);
          }
        const double rd = r_component_digital(p);
        CHECK(rd >= m.m22());
        if (pi == 0 || pi == 1) CHECK(rd == doctest::Approx(m.m22()).epsilon(1e-14));
        if (pi > 0 && pi < 1) CHECK(rd > m.m22());
      }
}

TEST_CASE("mean component size and individual reproduction number") {
  CHECK(mean_component_size(make(0.8, 1.0 / 7, 1.0 / 7, 0.0)) == 1.0);
  CHECK(mean_component_size(make(0.0, 1.0 / 7, 1.0 / 7, 0.7)) == 1.0);

  const Params none = make(0.8, 1.0 / 7, 1.0 / 7, 0.0);
  CHECK(r_individual_digital(none) == doctest::Approx(r0(none)).epsilon(1e-14));

  const Params all = make(6.0 / 7, 1.0 / 7, 1.0 / 7, 1.0);
  const double mu = mean_component_size(all);
  CHECK(r_individual_digital(all) == doctest::Approx((mu - 1) / mu).epsilon(1e-14));

  const auto rep = digital_report(kTable2);
  CHECK(rep.r_individual_nonapp == doctest::Approx(rep.r0));
  CHECK(rep.r_individual ==
        doctest::Approx(kTable2.pi * rep.r_individual_app + (1 - kTable2.pi) * rep.r_individual_nonapp));
}

TEST_CASE("R_ind_D is non-increasing in pi on the figure grid") {
  for (int t = 0; t <= 50; ++t) {
    const double tf = 5.0 / 6 * t / 50;
    double prev = INFINITY;
    for (int i = 0; i <= 50; ++i) {
      const Params p = with_testing_fraction(make(6.0 / 7, 1.0 / 7, 0, 0.02 * i), tf);
      double value;
      try {
        value = r_individual_digital(p);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SeriesDivergent);
        CHECK(tf == 0);
        prev = INFINITY;
        continue;
      }
      CAPTURE(tf);
      CAPTURE(p.pi);
      CHECK(value <= prev + 1e-9);
      prev = value;
    }
  }
}

TEST_CASE("R_D is not monotone in pi at low testing fraction") {
  bool found = false;
  for (double tf = 0.005; tf < 0.1 && !found; tf += 0.005) {
    const Params lo = with_testing_fraction(make(6.0 / 7, 1.0 / 7, 0, 0.3), tf);
    Params hi = lo;
    hi.pi = 0.6;
    found = r_component_digital(hi) > r_component_digital(lo);
  }
  CHECK(found);
}

TEST_CASE("R_D and R_ind_D cross 1 at the same pi") {
  auto root = [](auto f) {
    double lo = 0, hi = 1;  // both targets decrease through 1 on [0, 1] here
    for (int i = 0; i < 100; ++i) {
      const double mid = (lo + hi) / 2;
      (f(mid) > 1 ? lo : hi) = mid;
    }
    return (lo + hi) / 2;
  };
  const Params base = make(6.0 / 7, 1.0 / 7, 1.0 / 7, 0);
  const double rd = root([&](double pi) {
    Params p = base;
    p.pi = pi;
    return r_component_digital(p);
  });
  const double rind = root([&](double pi) {
    Params p = base;
    p.pi = pi;
    return r_individual_digital(p);
  });
  CHECK(std::abs(rd - rind) < 1e-3);
}
