#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace ctrace {

/// Rates and tracing fractions of the Markovian SIR model with diagnosis and
/// contact tracing. Rates are per unit time.
struct Params {
  double beta = 0.8;       ///< transmission rate
  double gamma = 1.0 / 7;  ///< natural recovery rate
  double delta = 1.0 / 7;  ///< diagnosis rate
  double pi = 0.0;         ///< fraction of app-users
  double p = 0.0;          ///< manual tracing success probability
  std::int64_t n = 5000;   ///< population size (epidemic simulation only)

  bool operator==(const Params&) const = default;
};

/// Names of every violated bound; empty iff params are valid.
std::vector<std::string> violations(const Params& params);

/// Returns params unchanged, or throws Error(InvalidParams) listing all
/// violated bounds by name.
Params validate(const Params& params);

/// Basic reproduction number beta / (gamma + delta).
double r0(const Params& params);

/// Fraction of infectives that get diagnosed before recovering.
class TestingFraction {
 public:
  explicit TestingFraction(double value);

  static TestingFraction of(double delta, double gamma);

  double value() const { return value_; }
  double delta_for(double gamma) const;

 private:
  double value_;
};

/// Copy of params with delta chosen so that delta/(delta+gamma) = fraction.
Params with_testing_fraction(Params params, double fraction);

// JSON form with keys exactly beta, gamma, delta, pi, p, n. Missing keys keep
// the values already in `base`; unknown keys are an error.
Params params_from_json(const nlohmann::json& j, Params base = {});
nlohmann::json params_to_json(const Params& params);

}  // namespace ctrace
