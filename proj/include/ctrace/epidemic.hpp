#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ctrace/params.hpp"
#include "ctrace/stats.hpp"

#include "json.hpp"

namespace ctrace {

enum class HealthState : std::uint8_t { Infectious, Recovered, Diagnosed };

struct TransmissionRecord {
  std::int32_t id = 0;
  std::optional<std::int32_t> infector;  // empty for the index case
  bool is_app_user = false;
  bool manual_edge = false;  // infector -> this edge reachable by manual tracing
  HealthState state = HealthState::Infectious;
};

/// Everyone ever infected, linked by who-infected-whom. Only edges of this
/// tree can be traced.
class TransmissionTree {
 public:
  std::int32_t add_index_case(bool is_app_user);
  std::int32_t add_infection(std::int32_t infector, bool is_app_user, bool manual_edge);

  std::size_t size() const { return records_.size(); }
  const TransmissionRecord& operator[](std::int32_t id) const { return records_[id]; }
  TransmissionRecord& operator[](std::int32_t id) { return records_[id]; }
  const std::vector<TransmissionRecord>& records() const { return records_; }

  /// Whether the edge from `child`'s infector to `child` can be traced:
  /// both endpoints use the app, or the edge was manually traceable.
  bool edge_traceable(std::int32_t child) const;

  template <typename F>
  void for_each_child(std::int32_t id, F&& f) const {
    for (std::int32_t c = first_child_[id]; c >= 0; c = next_sibling_[c]) f(c);
  }

 private:
  std::vector<TransmissionRecord> records_;
  std::vector<std::int32_t> first_child_;
  std::vector<std::int32_t> next_sibling_;
};

/// Diagnoses `diagnosed_id` and, breadth-first, everyone reachable from it
/// over traceable tree edges whose state is Infectious or Recovered. Returns
/// every individual newly diagnosed, starting with `diagnosed_id`.
std::vector<std::int32_t> trace_closure(std::int32_t diagnosed_id, TransmissionTree& tree);

/// True iff no Diagnosed individual has a traceable Infectious or Recovered
/// neighbour in the tree.
bool tracing_fixed_point(const TransmissionTree& tree);

enum class EventKind { Infection, Recovery, Diagnosis };

/// Snapshot handed to an observer after every event.
struct EpidemicSnapshot {
  EventKind event;
  double time;
  std::int64_t susceptible;
  std::int64_t infectious;
  std::int64_t recovered;
  std::int64_t diagnosed;
  std::int64_t n;
  const TransmissionTree& tree;
};

using EpidemicObserver = std::function<void(const EpidemicSnapshot&)>;

struct EpidemicOutcome {
  std::int64_t final_size = 0;
  std::int64_t peak_infectious = 0;
  std::int64_t event_count = 0;
  double duration = 0;
  std::int64_t diagnosed = 0;
};

/// One epidemic in a population of n starting from a single infective.
EpidemicOutcome run_epidemic(const Params& params, std::uint64_t seed, const EpidemicObserver& observer = {});

struct EnsembleSummary {
  std::uint64_t runs = 0;
  std::uint64_t majors = 0;
  double major_threshold = 0.10;
  double major_fraction = 0;
  Interval major_fraction_ci;
  double mean_major_size = 0;  // mean final_size / n among major runs
  double mean_major_size_se = 0;
};

struct EnsembleResult {
  EnsembleSummary summary;
  std::vector<EpidemicOutcome> outcomes;  // indexed by run
};

inline constexpr double kDefaultMajorThreshold = 0.10;

EnsembleResult run_ensemble(const Params& params, std::uint64_t runs, std::uint64_t seed,
                            double major_threshold = kDefaultMajorThreshold, unsigned threads = 0);

bool is_major(const EpidemicOutcome& outcome, std::int64_t n, double major_threshold);

/// Per-run CSV: run_index,final_size,peak_infectious,duration,major_flag.
void write_runs_csv(std::ostream& out, const EnsembleResult& result, std::int64_t n);
nlohmann::json summary_to_json(const EnsembleSummary& summary, const Params& params);

}  // namespace ctrace
