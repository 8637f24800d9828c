#pragma once

#include <array>
#include <cstdint>

#include "ctrace/params.hpp"

namespace ctrace {

enum class Provenance { Exact, SeriesTruncated, Estimated };

const char* to_string(Provenance provenance);

/// 2x2 mean offspring matrix; entry (i, j) is the mean number of type-j
/// offspring of one type-i individual. Indices are 0-based: type 0 is the
/// app-rooted type, type 1 the non-app type.
struct OffspringMatrix {
  std::array<std::array<double, 2>, 2> value{};
  std::array<std::array<Provenance, 2>, 2> provenance{};
  std::array<std::array<double, 2>, 2> se{};  // zero unless Estimated

  double operator()(int i, int j) const { return value[i][j]; }
  double m11() const { return value[0][0]; }
  double m12() const { return value[0][1]; }
  double m21() const { return value[1][0]; }
  double m22() const { return value[1][1]; }
};

struct SeriesControl {
  double tol = 1e-10;
  std::int64_t kmax = 1'000'000;
};

struct SeriesSum {
  double value = 0;
  std::int64_t terms = 0;   // number of tail probabilities summed
  double tail_bound = 0;    // rigorous bound on the neglected remainder
};

/// Throws Error(SeriesDivergent) unless delta > 0 or beta*pi < gamma.
void require_series_convergence(const Params& params);

/// P(N_c > k): probability that an app-using component is still alive after
/// k jumps of its birth/recovery/diagnosis walk started at size 1.
double tail_prob_jumps(std::int64_t k, const Params& params);

/// E[N_c] = 1 + sum_k P(N_c > k), with truncation metadata.
SeriesSum expected_jumps_series(const Params& params, const SeriesControl& ctrl = {});
double expected_jumps(const Params& params, const SeriesControl& ctrl = {});

/// Mean number of non-app-users infected by a component between two jumps.
double mean_infections_per_jump(const Params& params);

OffspringMatrix offspring_matrix_digital(const Params& params, const SeriesControl& ctrl = {});

/// Largest eigenvalue of a nonnegative 2x2 matrix.
double spectral_radius_2x2(const OffspringMatrix& m);
double spectral_radius_2x2(double m11, double m12, double m21, double m22);

/// Component reproduction number under digital tracing only.
double r_component_digital(const Params& params, const SeriesControl& ctrl = {});

/// Mean number of app-users ever infected in an app-using component.
double mean_component_size(const Params& params, const SeriesControl& ctrl = {});

/// Individual reproduction number under digital tracing only.
double r_individual_digital(const Params& params, const SeriesControl& ctrl = {});

/// Every closed-form digital-tracing quantity from a single series evaluation.
struct DigitalReport {
  double r0 = 0;
  OffspringMatrix matrix;
  SeriesSum jumps;
  double r_component = 0;
  double mean_component_size = 0;
  double r_individual_app = 0;
  double r_individual_nonapp = 0;
  double r_individual = 0;
};

DigitalReport digital_report(const Params& params, const SeriesControl& ctrl = {});

}  // namespace ctrace
