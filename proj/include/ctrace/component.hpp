#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ctrace/digital.hpp"
#include "ctrace/params.hpp"
#include "ctrace/rng.hpp"
#include "ctrace/stats.hpp"

namespace ctrace {

inline constexpr std::uint64_t kDefaultSeed = 20210531;
inline constexpr std::int64_t kDefaultEventCap = 10'000'000;
inline constexpr double kMaxCappedFraction = 1e-3;

/// Infectious app-users (k) and non-app-users (l) inside a to-be-traced
/// component of the combined model.
struct ComponentState {
  std::int64_t k = 0;
  std::int64_t l = 0;

  bool absorbed() const { return k + l == 0; }
};

enum class RootType { AppRoot = 0, NonAppRoot = 1 };

ComponentState initial_state(RootType root);

enum class DeathCause { AllRecovered, Diagnosed, EventCapHit };

struct ComponentOutcome {
  std::uint64_t births_app_root = 0;
  std::uint64_t births_nonapp_root = 0;
  std::int64_t jumps = 0;
  double app_exposure = 0;     // integral of k over the component's life
  double nonapp_exposure = 0;  // integral of l
  std::int64_t ever_infected_app = 0;
  std::int64_t ever_infected_nonapp = 0;
  DeathCause death_cause = DeathCause::AllRecovered;
};

struct SimulateOptions {
  std::int64_t event_cap = kDefaultEventCap;
  // Draw Poisson birth marks during each inter-event interval. Not needed by
  // the exposure-time estimator, which uses the intervals directly.
  bool sample_births = true;
};

/// Exact Gillespie simulation of one component until (k, l) = (0, 0).
ComponentOutcome simulate_component(RootType root, const Params& params, Rng& rng,
                                    const SimulateOptions& options = {});

enum class Estimator { DirectCount, ExposureTime };

const char* to_string(Estimator estimator);

struct McSettings {
  std::uint64_t replicates = 1'000'000;  // per root type
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;                  // 0 = auto
  Estimator estimator = Estimator::ExposureTime;
  std::int64_t event_cap = kDefaultEventCap;
  int bootstrap_resamples = 1000;
};

/// Monte Carlo estimate of the combined-model mean offspring matrix.
struct MatrixEstimate {
  OffspringMatrix mean;  // provenance Estimated, se filled in
  std::array<double, 2> row_covariance{};  // cov of the two sample means in each row
  std::uint64_t replicates = 0;            // per root type, before discarding capped runs
  std::array<std::uint64_t, 2> capped{};
  Estimator estimator = Estimator::ExposureTime;

  // Diagnostics per root type: mean jump count and mean number of app-users
  // ever infected, with standard errors.
  std::array<double, 2> mean_jumps{};
  std::array<double, 2> mean_jumps_se{};
  std::array<double, 2> mean_ever_app{};
  std::array<double, 2> mean_ever_app_se{};

  // Per-batch (count, row element 1 sum, row element 2 sum) for the batch
  // bootstrap; batches are fixed-size blocks of consecutive replicates.
  struct Batch {
    double count = 0;
    double sum1 = 0;
    double sum2 = 0;
  };
  std::array<std::vector<Batch>, 2> batches;
};

inline constexpr std::uint64_t kBatchSize = 1024;

MatrixEstimate estimate_offspring_matrix(const Params& params, const McSettings& settings = {});

struct CombinedR {
  double value = 0;
  double se = 0;               // delta-method standard error
  Interval ci;                 // 95% delta-method interval
  Interval bootstrap_ci;       // 95% percentile interval, batch bootstrap
  MatrixEstimate estimate;
};

/// Spectral radius of the estimated combined-model matrix with uncertainty.
CombinedR r_component_combined(const Params& params, const McSettings& settings = {});

/// Delta-method variance of the spectral radius given an estimated matrix.
double spectral_radius_variance(const MatrixEstimate& estimate);

struct NaiveProduct {
  double value = 0;
  double se = 0;
  Interval ci;
  double r0 = 0;
  double r_digital = 0;  // analytic, p = 0
  CombinedR r_manual;    // Monte Carlo, pi = 0
};

/// R_0 (1 - r_M)(1 - r_D) = R_M R_D / R_0, the combined reproduction number
/// one would predict if manual and digital tracing acted independently.
NaiveProduct naive_combined_r(const Params& params, const McSettings& settings = {},
                              const SeriesControl& ctrl = {});

inline Params manual_only(Params params) {
  params.pi = 0;
  return params;
}

inline Params digital_only(Params params) {
  params.p = 0;
  return params;
}

}  // namespace ctrace
