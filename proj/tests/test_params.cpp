#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "ctrace/error.hpp"
#include "ctrace/params.hpp"

using namespace ctrace;

namespace {

Params reference_params() {
  Params p;
  p.beta = 6.0 / 7;
  p.gamma = 1.0 / 7;
  p.delta = 1.0 / 7;
  p.pi = 0.5;
  p.p = 0.5;
  p.n = 5000;
  return p;
}

std::string validation_message(const Params& p) {
  try {
    validate(p);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidParams);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("validate accepts in-bounds parameters unchanged") {
  const Params p = reference_params();
  CHECK(validate(p) == p);
}

TEST_CASE("validate names each violated bound") {
  Params p = reference_params();
  p.beta = -1;
  CHECK(validation_message(p).find("beta negative") != std::string::npos);

  p = reference_params();
  p.pi = 1.5;
  CHECK(validation_message(p).find("pi out of [0,1]") != std::string::npos);

  p = reference_params();
  p.gamma = 0;
  CHECK(validation_message(p).find("gamma not positive") != std::string::npos);

  p.beta = -1;
  p.p = 2;
  p.n = 0;
  const auto msg = validation_message(p);
  for (const char* name : {"beta negative", "gamma not positive", "p out of [0,1]", "n less than 1"})
    CHECK(msg.find(name) != std::string::npos);
  CHECK(violations(p).size() == 4);
}

TEST_CASE("validate does not flag series divergence") {
  Params p = reference_params();
  p.delta = 0;
  p.pi = 1;
  CHECK(violations(p).empty());
}

TEST_CASE("r0 published values") {
  Params p;
  p.beta = 0.8;
  p.gamma = p.delta = 1.0 / 7;
  CHECK(r0(p) == doctest::Approx(2.80).epsilon(1e-12));

  p.beta = 6.0 / 7;
  CHECK(r0(p) == doctest::Approx(3.0).epsilon(1e-12));

  p.delta = 0;
  CHECK(r0(p) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("r0 is increasing in beta and decreasing in gamma and delta") {
  const double grid[] = {0.05, 0.1, 0.3, 0.7, 1.5};
  for (double a : grid)
    for (double b : grid)
      for (double c : grid) {
        Params p;
        p.beta = a;
        p.gamma = b;
        p.delta = c;
        Params q = p;
        q.beta *= 1.1;
        CHECK(r0(q) > r0(p));
        q = p;
        q.gamma *= 1.1;
        CHECK(r0(q) < r0(p));
        q = p;
        q.delta *= 1.1;
        CHECK(r0(q) < r0(p));
      }
}

TEST_CASE("testing fraction round-trips through delta") {
  for (double gamma : {1.0 / 7, 0.5, 3.0})
    for (double delta : {0.0, 1e-6, 1.0 / 28, 1.0 / 7, 2.0, 50.0}) {
      const double back = TestingFraction::of(delta, gamma).delta_for(gamma);
      CHECK(std::abs(back - delta) <= 1e-12 * std::max(delta, 1e-300));
    }
  CHECK(TestingFraction::of(1.0 / 7, 1.0 / 7).value() == doctest::Approx(0.5));
  CHECK_THROWS_AS(TestingFraction(1.0), Error);
  CHECK(with_testing_fraction(Params{}, 0.2).delta == doctest::Approx(1.0 / 28));
}

TEST_CASE("parameter JSON uses exact keys") {
  const Params p = reference_params();
  CHECK(params_from_json(params_to_json(p)) == p);

  const auto partial = params_from_json(nlohmann::json{{"beta", 0.9}}, p);
  CHECK(partial.beta == 0.9);
  CHECK(partial.gamma == p.gamma);

  CHECK_THROWS_WITH_AS(params_from_json(nlohmann::json{{"bta", 0.9}}), doctest::Contains("bta"), Error);
  CHECK_THROWS_AS(params_from_json(nlohmann::json{{"n", 2.5}}), Error);
  CHECK_THROWS_AS(params_from_json(nlohmann::json{{"pi", "half"}}), Error);
}
