#include "ctrace/digital.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ctrace/error.hpp"

namespace ctrace {

const char* to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::Exact: return "exact";
    case Provenance::SeriesTruncated: return "series";
    case Provenance::Estimated: return "estimated";
  }
  return "unknown";
}

namespace {

// Walk of an app-using component at size k: up at k*beta*pi, down at
// k*gamma, killed at k*delta. Jump probabilities do not depend on k.
struct Walk {
  double q;      // P(up | not killed)
  double r;      // P(not killed) per jump
  double log_q;
  double log_1mq;

  explicit Walk(const Params& params) {
    const double up = params.beta * params.pi;
    q = up / (up + params.gamma);
    r = (up + params.gamma) / (up + params.gamma + params.delta);
    log_q = std::log(q);
    log_1mq = std::log1p(-q);
  }

  // Probability that the unkilled walk from 1 first hits 0 at step 2j-1:
  // Catalan(j-1) q^(j-1) (1-q)^j, evaluated in log space.
  double first_passage(std::int64_t j) const {
    if (j == 1) return 1 - q;
    if (q == 0) return 0;
    const double jd = static_cast<double>(j);
    const double log_binom = std::lgamma(2 * jd) - std::lgamma(jd + 1) - std::lgamma(jd);
    return std::exp(log_binom - std::log(2 * jd - 1) + (jd - 1) * log_q + jd * log_1mq);
  }

  // Probability that the unkilled walk never hits 0.
  double survival() const { return q > 0.5 ? (2 * q - 1) / q : 0.0; }

  // Rigorous bound on sum_{j>k} e_j r^j, where e_j = P(unkilled walk alive
  // after j steps) - survival() is non-increasing.
  double tail_bound(std::int64_t k, double excess) const {
    double bound = std::numeric_limits<double>::infinity();
    const double kd = static_cast<double>(k);
    if (r < 1) bound = excess * std::exp((kd + 1) * std::log(r)) / (1 - r);
    // Conditioned on extinction the walk steps up with probability
    // min(q, 1-q), so e_j <= min(1, (1-q)/q) (2 sqrt(q(1-q)))^j (Chernoff).
    const double rho = 2 * std::sqrt(q * (1 - q)) * r;
    const double weight = q > 0.5 ? (1 - q) / q : 1.0;
    if (rho < 1) bound = std::min(bound, weight * std::exp((kd + 1) * std::log(rho)) / (1 - rho));
    return bound;
  }
};

}  // namespace

void require_series_convergence(const Params& params) {
  if (params.delta > 0 || params.beta * params.pi < params.gamma) return;
  std::ostringstream msg;
  msg << "E[N_c] diverges: requires delta > 0 or beta*pi < gamma (delta=" << params.delta
      << ", beta*pi=" << params.beta * params.pi << ", gamma=" << params.gamma << ")";
  throw Error(ErrorKind::SeriesDivergent, msg.str());
}

double tail_prob_jumps(std::int64_t k, const Params& params) {
  if (k < 1) throw Error(ErrorKind::InvalidParams, "tail_prob_jumps requires k >= 1");
  validate(params);
  const Walk walk(params);
  const std::int64_t last = (k + 1) / 2;
  double absorbed = 0;
  for (std::int64_t j = 1; j <= last; ++j) {
    const double term = walk.first_passage(j);
    absorbed += term;
    if (term == 0 && j > 1) break;
  }
  const double bracket = std::clamp(1 - absorbed, 0.0, 1.0);
  return bracket * std::pow(walk.r, static_cast<double>(k));
}

SeriesSum expected_jumps_series(const Params& params, const SeriesControl& ctrl) {
  validate(params);
  require_series_convergence(params);
  if (!(ctrl.tol > 0) || ctrl.kmax < 1)
    throw Error(ErrorKind::InvalidParams, "series control requires tol > 0 and kmax >= 1");

  const Walk walk(params);
  const double log_r = std::log(walk.r);
  // E[N_c] = sum_k P(alive after k) r^k. The part due to walks that never
  // die out sums in closed form; only the decaying excess is summed.
  const double survival = walk.survival();
  SeriesSum sum{survival > 0 ? survival / (1 - walk.r) + (1 - survival) : 1.0, 0, 0.0};
  double absorbed = 0;  // running sum of first-passage terms, j <= ceil(k/2)
  for (std::int64_t k = 1; k <= ctrl.kmax; ++k) {
    // ceil(k/2) grows by one exactly when k is odd.
    if (k % 2 == 1) absorbed += walk.first_passage((k + 1) / 2);
    const double excess = std::clamp(1 - absorbed - survival, 0.0, 1.0);
    sum.value += excess * std::exp(static_cast<double>(k) * log_r);
    sum.terms = k;
    sum.tail_bound = excess == 0 ? 0.0 : walk.tail_bound(k, excess);
    if (sum.tail_bound < ctrl.tol) return sum;
  }
  std::ostringstream msg;
  msg << "E[N_c] series did not reach tol=" << ctrl.tol << " within kmax=" << ctrl.kmax
      << " terms (remaining tail bound " << sum.tail_bound << ")";
  throw Error(ErrorKind::SeriesCapReached, msg.str());
}

double expected_jumps(const Params& params, const SeriesControl& ctrl) {
  return expected_jumps_series(params, ctrl).value;
}

double mean_infections_per_jump(const Params& params) {
  validate(params);
  return params.beta * (1 - params.pi) / (params.beta * params.pi + params.gamma + params.delta);
}

namespace {

OffspringMatrix matrix_from_jumps(const Params& params, double jumps) {
  const double removal = params.gamma + params.delta;
  OffspringMatrix m;
  m.value[0][0] = 0;
  m.value[0][1] = mean_infections_per_jump(params) * jumps;
  m.value[1][0] = params.beta * params.pi / removal;
  m.value[1][1] = params.beta * (1 - params.pi) / removal;
  m.provenance = {{{Provenance::Exact, Provenance::SeriesTruncated}, {Provenance::Exact, Provenance::Exact}}};
  return m;
}

// Each jump is a birth with probability beta*pi/(beta*pi+gamma+delta); by
// Wald's identity the expected number of births is that times E[N_c].
double component_size_from_jumps(const Params& params, double jumps) {
  const double up = params.beta * params.pi;
  return 1 + up / (up + params.gamma + params.delta) * jumps;
}

}  // namespace

OffspringMatrix offspring_matrix_digital(const Params& params, const SeriesControl& ctrl) {
  return matrix_from_jumps(params, expected_jumps(params, ctrl));
}

double spectral_radius_2x2(double m11, double m12, double m21, double m22) {
  // ((m11-m22)/2)^2 + m12*m21 is the discriminant in a form that cannot go
  // negative through cancellation.
  const double half_diff = (m11 - m22) / 2;
  return (m11 + m22) / 2 + std::sqrt(half_diff * half_diff + m12 * m21);
}

double spectral_radius_2x2(const OffspringMatrix& m) {
  return spectral_radius_2x2(m.m11(), m.m12(), m.m21(), m.m22());
}

double r_component_digital(const Params& params, const SeriesControl& ctrl) {
  return spectral_radius_2x2(offspring_matrix_digital(params, ctrl));
}

double mean_component_size(const Params& params, const SeriesControl& ctrl) {
  return component_size_from_jumps(params, expected_jumps(params, ctrl));
}

DigitalReport digital_report(const Params& params, const SeriesControl& ctrl) {
  DigitalReport report;
  report.jumps = expected_jumps_series(params, ctrl);
  report.r0 = r0(params);
  report.matrix = matrix_from_jumps(params, report.jumps.value);
  report.r_component = spectral_radius_2x2(report.matrix);
  report.mean_component_size = component_size_from_jumps(params, report.jumps.value);
  const double mu = report.mean_component_size;
  report.r_individual_app = ((mu - 1) + report.matrix.m12()) / mu;
  report.r_individual_nonapp = report.matrix.m21() + report.matrix.m22();
  report.r_individual = params.pi * report.r_individual_app + (1 - params.pi) * report.r_individual_nonapp;
  return report;
}

double r_individual_digital(const Params& params, const SeriesControl& ctrl) {
  return digital_report(params, ctrl).r_individual;
}

}  // namespace ctrace
