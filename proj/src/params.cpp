#include "ctrace/params.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "ctrace/error.hpp"

namespace ctrace {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParams: return "invalid_params";
    case ErrorKind::SeriesDivergent: return "divergent";
    case ErrorKind::SeriesCapReached: return "series_cap";
    case ErrorKind::EventCapExceeded: return "event_cap";
    case ErrorKind::NoStraddle: return "no_root";
    case ErrorKind::NonMonotone: return "non_monotone";
    case ErrorKind::InvalidConfig: return "invalid_config";
  }
  return "unknown";
}

std::vector<std::string> violations(const Params& params) {
  std::vector<std::string> out;
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(params.beta) || params.beta < 0) out.push_back("beta negative");
  if (!finite(params.gamma) || params.gamma <= 0) out.push_back("gamma not positive");
  if (!finite(params.delta) || params.delta < 0) out.push_back("delta negative");
  if (!finite(params.pi) || params.pi < 0 || params.pi > 1) out.push_back("pi out of [0,1]");
  if (!finite(params.p) || params.p < 0 || params.p > 1) out.push_back("p out of [0,1]");
  if (params.n < 1) out.push_back("n less than 1");
  return out;
}

Params validate(const Params& params) {
  auto bad = violations(params);
  if (bad.empty()) return params;
  std::ostringstream msg;
  msg << "invalid parameters: ";
  for (std::size_t i = 0; i < bad.size(); ++i) msg << (i ? "; " : "") << bad[i];
  throw Error(ErrorKind::InvalidParams, msg.str());
}

double r0(const Params& params) { return params.beta / (params.gamma + params.delta); }

TestingFraction::TestingFraction(double value) : value_(value) {
  if (!(value >= 0 && value < 1))
    throw Error(ErrorKind::InvalidParams, "testing fraction out of [0,1)");
}

TestingFraction TestingFraction::of(double delta, double gamma) {
  return TestingFraction(delta / (delta + gamma));
}

double TestingFraction::delta_for(double gamma) const { return gamma * value_ / (1 - value_); }

Params with_testing_fraction(Params params, double fraction) {
  params.delta = TestingFraction(fraction).delta_for(params.gamma);
  return params;
}

Params params_from_json(const nlohmann::json& j, Params base) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "parameter block must be a JSON object");
  static const std::set<std::string> known = {"beta", "gamma", "delta", "pi", "p", "n"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorKind::InvalidConfig, "unknown parameter key \"" + key + "\"");
    if (!value.is_number())
      throw Error(ErrorKind::InvalidConfig, "parameter \"" + key + "\" must be a number");
  }
  if (j.contains("beta")) base.beta = j["beta"].get<double>();
  if (j.contains("gamma")) base.gamma = j["gamma"].get<double>();
  if (j.contains("delta")) base.delta = j["delta"].get<double>();
  if (j.contains("pi")) base.pi = j["pi"].get<double>();
  if (j.contains("p")) base.p = j["p"].get<double>();
  if (j.contains("n")) {
    if (!j["n"].is_number_integer()) throw Error(ErrorKind::InvalidConfig, "parameter \"n\" must be an integer");
    base.n = j["n"].get<std::int64_t>();
  }
  return base;
}

nlohmann::json params_to_json(const Params& params) {
  return {{"beta", params.beta}, {"gamma", params.gamma}, {"delta", params.delta},
          {"pi", params.pi},     {"p", params.p},         {"n", params.n}};
}

}  // namespace ctrace
