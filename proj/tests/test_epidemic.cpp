#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "ctrace/epidemic.hpp"
#include "ctrace/error.hpp"

using namespace ctrace;

namespace {

Params make(double beta, double delta, double pi, double p, std::int64_t n) {
  Params params;
  params.beta = beta;
  params.gamma = 1.0 / 7;
  params.delta = delta;
  params.pi = pi;
  params.p = p;
  params.n = n;
  return params;
}

std::vector<std::int32_t> sorted(std::vector<std::int32_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("isolated index case diagnoses only itself") {
  TransmissionTree tree;
  const auto root = tree.add_index_case(true);
  CHECK(trace_closure(root, tree) == std::vector<std::int32_t>{root});
  CHECK(tree[root].state == HealthState::Diagnosed);
  CHECK(trace_closure(root, tree).empty());
}

TEST_CASE("app chain stops at a non-app-user without a manual edge") {
  TransmissionTree tree;
  const auto a = tree.add_index_case(true);
  const auto b = tree.add_infection(a, true, false);
  const auto c = tree.add_infection(b, false, false);
  const auto d = tree.add_infection(c, true, false);
  CHECK(tree.edge_traceable(b));
  CHECK_FALSE(tree.edge_traceable(c));
  CHECK_FALSE(tree.edge_traceable(d));

  const auto closure = trace_closure(b, tree);
  CHECK(closure.front() == b);
  CHECK(sorted(closure) == std::vector<std::int32_t>{a, b});
  CHECK(tree[c].state == HealthState::Infectious);
  CHECK(tracing_fixed_point(tree));
}

TEST_CASE("manual edges make the whole tree traceable") {
  TransmissionTree tree;
  const auto root = tree.add_index_case(false);
  std::vector<std::int32_t> all{root};
  for (int i = 1; i < 30; ++i) all.push_back(tree.add_infection(all[(i - 1) / 2], i % 3 == 0, true));
  const auto closure = trace_closure(all[17], tree);
  CHECK(closure.size() == all.size());
  CHECK(sorted(closure) == all);
}

TEST_CASE("recovered individuals are traced and expanded") {
  TransmissionTree tree;
  const auto a = tree.add_index_case(true);
  const auto b = tree.add_infection(a, true, false);
  const auto c = tree.add_infection(b, true, false);
  tree[b].state = HealthState::Recovered;
  CHECK(sorted(trace_closure(a, tree)) == std::vector<std::int32_t>{a, b, c});
  CHECK(tree[b].state == HealthState::Diagnosed);
}

TEST_CASE("already diagnosed individuals are not revisited") {
  TransmissionTree tree;
  const auto a = tree.add_index_case(true);
  const auto b = tree.add_infection(a, true, false);
  const auto c = tree.add_infection(b, true, false);
  tree[b].state = HealthState::Diagnosed;
  // b blocks the walk: its own closure was already taken.
  CHECK(trace_closure(c, tree) == std::vector<std::int32_t>{c});
  CHECK(tree[a].state == HealthState::Infectious);
}

TEST_CASE("no transmission gives final size one") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto o = run_epidemic(make(0.0, 1.0 / 7, 0.5, 0.5, 100), seed);
    CHECK(o.final_size == 1);
    CHECK(o.event_count == 1);
  }
}

TEST_CASE("without diagnosis tracing parameters do not matter") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = run_epidemic(make(0.8, 0.0, 0.0, 0.0, 500), seed);
    const auto b = run_epidemic(make(0.8, 0.0, 0.9, 0.7, 500), seed);
    CHECK(a.final_size == b.final_size);
    CHECK(a.duration == b.duration);
    CHECK(a.event_count == b.event_count);
    CHECK(b.diagnosed == 0);
  }
}

TEST_CASE("observer sees conserved counts and a tracing fixed point") {
  const Params p = make(0.8, 1.0 / 7, 0.6, 0.5, 300);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    double last_time = 0;
    std::int64_t checked = 0;
    const auto o = run_epidemic(p, seed, [&](const EpidemicSnapshot& s) {
      CHECK(s.susceptible + s.infectious + s.recovered + s.diagnosed == s.n);
      CHECK(s.time >= last_time);
      CHECK(static_cast<std::int64_t>(s.tree.size()) == s.n - s.susceptible);
      last_time = s.time;
      if (s.event == EventKind::Diagnosis) {
        CHECK(tracing_fixed_point(s.tree));
        std::int64_t infectious = 0;
        for (const auto& rec : s.tree.records()) infectious += rec.state == HealthState::Infectious;
        CHECK(infectious == s.infectious);
      }
      ++checked;
    });
    CHECK(checked == o.event_count);
    CHECK(o.final_size <= p.n);
  }
}

TEST_CASE("runs are reproducible from the seed") {
  const Params p = make(0.8, 1.0 / 7, 2.0 / 3, 2.0 / 3, 1000);
  const auto a = run_epidemic(p, 12345);
  const auto b = run_epidemic(p, 12345);
  CHECK(a.final_size == b.final_size);
  CHECK(a.duration == b.duration);
  CHECK(a.peak_infectious == b.peak_infectious);
}

TEST_CASE("ensemble output is independent of thread count") {
  const Params p = make(0.8, 1.0 / 7, 0.5, 0.5, 500);
  const auto one = run_ensemble(p, 200, 7, kDefaultMajorThreshold, 1);
  const auto four = run_ensemble(p, 200, 7, kDefaultMajorThreshold, 4);
  std::ostringstream a, b;
  write_runs_csv(a, one, p.n);
  write_runs_csv(b, four, p.n);
  CHECK(a.str() == b.str());
  CHECK(summary_to_json(one.summary, p) == summary_to_json(four.summary, p));
  CHECK(a.str().rfind("run_index,final_size,peak_infectious,duration,major_flag\n", 0) == 0);
}

TEST_CASE("no-intervention ensemble matches the branching-limit major probability") {
  // P(major) ~ 1 - 1/R0 for a Markovian SIR in a large population.
  const Params p = make(0.8, 0.0, 0.0, 0.0, 2000);
  const auto r = run_ensemble(p, 2000, 3);
  const double expected = 1 - 1 / r0(p);
  CHECK(r.summary.major_fraction_ci.low - 0.01 <= expected);
  CHECK(r.summary.major_fraction_ci.high + 0.01 >= expected);
}

TEST_CASE("ensemble input checks") {
  CHECK_THROWS_AS(run_ensemble(make(0.8, 0.1, 0, 0, 100), 0, 1), Error);
  CHECK_THROWS_AS(run_ensemble(make(0.8, 0.1, 0, 0, 100), 10, 1, 1.5), Error);
  CHECK_THROWS_AS(run_epidemic(make(0.8, 0.1, 0, 0, 1), 1), Error);
}
