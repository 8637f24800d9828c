#include "ctrace/component.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctrace/error.hpp"
#include "ctrace/parallel.hpp"

namespace ctrace {

const char* to_string(Estimator estimator) {
  return estimator == Estimator::DirectCount ? "direct_count" : "exposure_time";
}

ComponentState initial_state(RootType root) {
  return root == RootType::AppRoot ? ComponentState{1, 0} : ComponentState{0, 1};
}

ComponentOutcome simulate_component(RootType root, const Params& params, Rng& rng,
                                    const SimulateOptions& options) {
  const double app_growth = params.beta * params.pi;                     // per k, and per l times p
  const double nonapp_growth = params.beta * (1 - params.pi) * params.p;  // per (k + l)
  const double birth_app = params.beta * params.pi * (1 - params.p);      // per l
  const double birth_nonapp = params.beta * (1 - params.pi) * (1 - params.p);  // per (k + l)
  const double gamma = params.gamma;
  const double delta = params.delta;

  ComponentState s = initial_state(root);
  ComponentOutcome out;
  out.ever_infected_app = s.k;
  out.ever_infected_nonapp = s.l;

  while (!s.absorbed()) {
    if (out.jumps >= options.event_cap) {
      out.death_cause = DeathCause::EventCapHit;
      return out;
    }
    const double k = static_cast<double>(s.k);
    const double l = static_cast<double>(s.l);
    const double rate_app_up = app_growth * (k + l * params.p);
    const double rate_app_down = gamma * k;
    const double rate_nonapp_up = nonapp_growth * (k + l);
    const double rate_nonapp_down = gamma * l;
    const double rate_kill = delta * (k + l);
    const double total = rate_app_up + rate_app_down + rate_nonapp_up + rate_nonapp_down + rate_kill;

    const double tau = rng.exponential(total);
    out.app_exposure += k * tau;
    out.nonapp_exposure += l * tau;
    if (options.sample_births) {
      out.births_app_root += rng.poisson(l * birth_app * tau);
      out.births_nonapp_root += rng.poisson((k + l) * birth_nonapp * tau);
    }

    ++out.jumps;
    double u = rng.uniform() * total;
    if ((u -= rate_app_up) < 0) {
      ++s.k;
      ++out.ever_infected_app;
    } else if ((u -= rate_app_down) < 0) {
      --s.k;
    } else if ((u -= rate_nonapp_up) < 0) {
      ++s.l;
      ++out.ever_infected_nonapp;
    } else if ((u -= rate_nonapp_down) < 0 || rate_kill == 0) {
      // rate_kill == 0 guards the fall-through from rounding in u.
      if (s.l > 0) {
        --s.l;
      } else {
        --s.k;
      }
    } else {
      s = {0, 0};
      out.death_cause = DeathCause::Diagnosed;
    }
  }
  return out;
}

namespace {

// Per-replicate sample: the two row elements, jumps, app-users ever infected.
using RowMoments = Moments<4>;

struct ChunkResult {
  RowMoments moments;
  std::uint64_t capped = 0;
};

ChunkResult run_chunk(RootType root, const Params& params, const McSettings& settings,
                      std::uint64_t begin, std::uint64_t end) {
  SimulateOptions options;
  options.event_cap = settings.event_cap;
  options.sample_births = settings.estimator == Estimator::DirectCount;

  const double birth_app = params.beta * params.pi * (1 - params.p);
  const double birth_nonapp = params.beta * (1 - params.pi) * (1 - params.p);
  const auto root_index = static_cast<std::uint64_t>(root);

  ChunkResult result;
  for (std::uint64_t i = begin; i < end; ++i) {
    Rng rng(derive_seed(settings.seed, {root_index, i}));
    const ComponentOutcome o = simulate_component(root, params, rng, options);
    if (o.death_cause == DeathCause::EventCapHit) {
      ++result.capped;
      continue;
    }
    double to_app, to_nonapp;
    if (settings.estimator == Estimator::DirectCount) {
      to_app = static_cast<double>(o.births_app_root);
      to_nonapp = static_cast<double>(o.births_nonapp_root);
    } else {
      to_app = birth_app * o.nonapp_exposure;
      to_nonapp = birth_nonapp * (o.app_exposure + o.nonapp_exposure);
    }
    result.moments.add({to_app, to_nonapp, static_cast<double>(o.jumps),
                        static_cast<double>(o.ever_infected_app)});
  }
  return result;
}

}  // namespace

MatrixEstimate estimate_offspring_matrix(const Params& params, const McSettings& settings) {
  validate(params);
  if (settings.replicates < 2) throw Error(ErrorKind::InvalidParams, "component Monte Carlo needs replicates >= 2");

  const std::uint64_t chunks_per_root = (settings.replicates + kBatchSize - 1) / kBatchSize;
  std::vector<ChunkResult> chunks(2 * chunks_per_root);
  parallel_for(chunks.size(), settings.threads, [&](std::size_t c) {
    const auto root = c < chunks_per_root ? RootType::AppRoot : RootType::NonAppRoot;
    const std::uint64_t begin = (c % chunks_per_root) * kBatchSize;
    const std::uint64_t end = std::min(begin + kBatchSize, settings.replicates);
    chunks[c] = run_chunk(root, params, settings, begin, end);
  });

  MatrixEstimate est;
  est.replicates = settings.replicates;
  est.estimator = settings.estimator;
  for (int row = 0; row < 2; ++row) {
    RowMoments total;
    auto& batches = est.batches[row];
    batches.reserve(chunks_per_root);
    for (std::uint64_t c = 0; c < chunks_per_root; ++c) {
      const ChunkResult& chunk = chunks[row * chunks_per_root + c];
      total.merge(chunk.moments);
      est.capped[row] += chunk.capped;
      const double n = static_cast<double>(chunk.moments.count());
      if (n > 0) batches.push_back({n, chunk.moments.mean(0) * n, chunk.moments.mean(1) * n});
    }
    if (static_cast<double>(est.capped[row]) > kMaxCappedFraction * static_cast<double>(settings.replicates)) {
      std::ostringstream msg;
      msg << est.capped[row] << " of " << settings.replicates << " components rooted at "
          << (row == 0 ? "an app-user" : "a non-app-user") << " hit the event cap of " << settings.event_cap;
      throw Error(ErrorKind::EventCapExceeded, msg.str());
    }
    for (int col = 0; col < 2; ++col) {
      est.mean.value[row][col] = total.mean(col);
      est.mean.se[row][col] = total.se(col);
      est.mean.provenance[row][col] = Provenance::Estimated;
    }
    est.row_covariance[row] = total.mean_covariance(0, 1);
    est.mean_jumps[row] = total.mean(2);
    est.mean_jumps_se[row] = total.se(2);
    est.mean_ever_app[row] = total.mean(3);
    est.mean_ever_app_se[row] = total.se(3);
  }
  return est;
}

double spectral_radius_variance(const MatrixEstimate& estimate) {
  const auto& m = estimate.mean;
  const double half_diff = (m.m11() - m.m22()) / 2;
  const double root = std::sqrt(half_diff * half_diff + m.m12() * m.m21());
  std::array<double, 4> g{};  // d lambda / d (m11, m12, m21, m22)
  if (root > 0) {
    g = {0.5 + half_diff / (2 * root), m.m21() / (2 * root), m.m12() / (2 * root), 0.5 - half_diff / (2 * root)};
  } else {
    // Non-differentiable point; use the one-sided gradient of max(m11, m22).
    g = {m.m11() >= m.m22() ? 1.0 : 0.0, 0, 0, m.m11() >= m.m22() ? 0.0 : 1.0};
  }
  auto se2 = [&](int i, int j) { return m.se[i][j] * m.se[i][j]; };
  // Rows come from independent replicate sets; elements within a row covary.
  return g[0] * g[0] * se2(0, 0) + g[1] * g[1] * se2(0, 1) + 2 * g[0] * g[1] * estimate.row_covariance[0] +
         g[2] * g[2] * se2(1, 0) + g[3] * g[3] * se2(1, 1) + 2 * g[2] * g[3] * estimate.row_covariance[1];
}

namespace {

Interval batch_bootstrap(const MatrixEstimate& est, int resamples, std::uint64_t seed) {
  if (resamples < 1 || est.batches[0].empty() || est.batches[1].empty()) return {};
  Rng rng(derive_seed(seed, {0xb007u}));
  std::vector<double> values;
  values.reserve(resamples);
  for (int b = 0; b < resamples; ++b) {
    std::array<std::array<double, 2>, 2> m{};
    for (int row = 0; row < 2; ++row) {
      const auto& batches = est.batches[row];
      double count = 0, s1 = 0, s2 = 0;
      for (std::size_t i = 0; i < batches.size(); ++i) {
        const auto& pick = batches[rng.below(batches.size())];
        count += pick.count;
        s1 += pick.sum1;
        s2 += pick.sum2;
      }
      m[row] = {s1 / count, s2 / count};
    }
    values.push_back(spectral_radius_2x2(m[0][0], m[0][1], m[1][0], m[1][1]));
  }
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {quantile(0.025), quantile(0.975)};
}

}  // namespace

CombinedR r_component_combined(const Params& params, const McSettings& settings) {
  CombinedR result;
  result.estimate = estimate_offspring_matrix(params, settings);
  result.value = spectral_radius_2x2(result.estimate.mean);
  result.se = std::sqrt(spectral_radius_variance(result.estimate));
  result.ci = {result.value - kZ95 * result.se, result.value + kZ95 * result.se};
  result.bootstrap_ci = batch_bootstrap(result.estimate, settings.bootstrap_resamples, settings.seed);
  return result;
}

NaiveProduct naive_combined_r(const Params& params, const McSettings& settings, const SeriesControl& ctrl) {
  validate(params);
  NaiveProduct out;
  out.r0 = r0(params);
  // With no app-users there is no digital reduction, and with p = 0 no
  // manual one; those factors are exactly R_0.
  out.r_digital = params.pi == 0 ? out.r0 : r_component_digital(digital_only(params), ctrl);
  if (params.p == 0) {
    out.r_manual.value = out.r0;
    out.r_manual.ci = out.r_manual.bootstrap_ci = {out.r0, out.r0};
  } else {
    out.r_manual = r_component_combined(manual_only(params), settings);
  }
  if (out.r0 > 0) {
    const double scale = out.r_digital / out.r0;
    out.value = out.r_manual.value * scale;
    out.se = out.r_manual.se * scale;
  }
  out.ci = {out.value - kZ95 * out.se, out.value + kZ95 * out.se};
  return out;
}

}  // namespace ctrace
