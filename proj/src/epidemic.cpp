#include "ctrace/epidemic.hpp"

#include <cmath>
#include <deque>
#include <ostream>

#include "ctrace/error.hpp"
#include "ctrace/parallel.hpp"
#include "ctrace/rng.hpp"

namespace ctrace {

std::int32_t TransmissionTree::add_index_case(bool is_app_user) {
  const auto id = static_cast<std::int32_t>(records_.size());
  records_.push_back({id, std::nullopt, is_app_user, false, HealthState::Infectious});
  first_child_.push_back(-1);
  next_sibling_.push_back(-1);
  return id;
}

std::int32_t TransmissionTree::add_infection(std::int32_t infector, bool is_app_user, bool manual_edge) {
  const auto id = static_cast<std::int32_t>(records_.size());
  records_.push_back({id, infector, is_app_user, manual_edge, HealthState::Infectious});
  first_child_.push_back(-1);
  next_sibling_.push_back(first_child_[infector]);
  first_child_[infector] = id;
  return id;
}

bool TransmissionTree::edge_traceable(std::int32_t child) const {
  const auto& rec = records_[child];
  if (!rec.infector) return false;
  return rec.manual_edge || (rec.is_app_user && records_[*rec.infector].is_app_user);
}

std::vector<std::int32_t> trace_closure(std::int32_t diagnosed_id, TransmissionTree& tree) {
  std::vector<std::int32_t> diagnosed;
  if (tree[diagnosed_id].state == HealthState::Diagnosed) return diagnosed;
  tree[diagnosed_id].state = HealthState::Diagnosed;
  diagnosed.push_back(diagnosed_id);

  auto visit = [&](std::int32_t other) {
    auto& rec = tree[other];
    if (rec.state == HealthState::Diagnosed) return;
    rec.state = HealthState::Diagnosed;
    diagnosed.push_back(other);
  };
  // `diagnosed` doubles as the BFS queue.
  for (std::size_t head = 0; head < diagnosed.size(); ++head) {
    const std::int32_t v = diagnosed[head];
    const auto& rec = tree[v];
    if (rec.infector && tree.edge_traceable(v)) visit(*rec.infector);
    tree.for_each_child(v, [&](std::int32_t c) {
      if (tree.edge_traceable(c)) visit(c);
    });
  }
  return diagnosed;
}

bool tracing_fixed_point(const TransmissionTree& tree) {
  for (const auto& rec : tree.records()) {
    if (!rec.infector || !tree.edge_traceable(rec.id)) continue;
    const bool child_diag = rec.state == HealthState::Diagnosed;
    const bool parent_diag = tree[*rec.infector].state == HealthState::Diagnosed;
    if (child_diag != parent_diag) return false;
  }
  return true;
}

namespace {

// Infectious individuals with O(1) removal and uniform sampling.
class InfectiousSet {
 public:
  explicit InfectiousSet(std::size_t capacity) { pos_.reserve(capacity); }

  void insert(std::int32_t id) {
    if (pos_.size() <= static_cast<std::size_t>(id)) pos_.resize(id + 1, -1);
    pos_[id] = static_cast<std::int32_t>(members_.size());
    members_.push_back(id);
  }

  void erase(std::int32_t id) {
    const std::int32_t at = pos_[id];
    if (at < 0) return;
    const std::int32_t last = members_.back();
    members_[at] = last;
    pos_[last] = at;
    members_.pop_back();
    pos_[id] = -1;
  }

  std::int32_t pick(Rng& rng) const { return members_[rng.below(members_.size())]; }
  std::int64_t size() const { return static_cast<std::int64_t>(members_.size()); }

 private:
  std::vector<std::int32_t> members_;
  std::vector<std::int32_t> pos_;
};

}  // namespace

EpidemicOutcome run_epidemic(const Params& params, std::uint64_t seed, const EpidemicObserver& observer) {
  validate(params);
  if (params.n < 2) throw Error(ErrorKind::InvalidParams, "epidemic simulation requires n >= 2");

  Rng rng(seed);
  const std::int64_t n = params.n;
  const double beta_over_n = params.beta / static_cast<double>(n);

  TransmissionTree tree;
  InfectiousSet infectious(static_cast<std::size_t>(n));
  infectious.insert(tree.add_index_case(rng.bernoulli(params.pi)));

  std::int64_t susceptible = n - 1;
  std::int64_t recovered = 0;
  std::int64_t diagnosed = 0;
  double time = 0;
  EpidemicOutcome out;
  out.peak_infectious = 1;

  while (infectious.size() > 0) {
    const double i = static_cast<double>(infectious.size());
    const double rate_infect = beta_over_n * i * static_cast<double>(susceptible);
    const double rate_recover = params.gamma * i;
    const double rate_diagnose = params.delta * i;
    const double total = rate_infect + rate_recover + rate_diagnose;
    time += rng.exponential(total);
    ++out.event_count;

    EventKind kind;
    const double u = rng.uniform() * total;
    if (u < rate_infect) {
      kind = EventKind::Infection;
      const std::int32_t infector = infectious.pick(rng);
      const bool app = rng.bernoulli(params.pi);
      const bool manual = rng.bernoulli(params.p);
      infectious.insert(tree.add_infection(infector, app, manual));
      --susceptible;
      out.peak_infectious = std::max(out.peak_infectious, infectious.size());
    } else if (u < rate_infect + rate_recover || rate_diagnose == 0) {
      kind = EventKind::Recovery;
      const std::int32_t who = infectious.pick(rng);
      tree[who].state = HealthState::Recovered;
      infectious.erase(who);
      ++recovered;
    } else {
      kind = EventKind::Diagnosis;
      const std::int32_t who = infectious.pick(rng);
      // Tracing is instantaneous: the whole closure is removed before the
      // clock moves again. Traced recovered individuals move to Diagnosed.
      for (std::int32_t id : trace_closure(who, tree)) {
        infectious.erase(id);  // no-op for those who had already recovered
        ++diagnosed;
      }
      recovered = static_cast<std::int64_t>(tree.size()) - infectious.size() - diagnosed;
    }

    if (observer) {
      observer(EpidemicSnapshot{kind, time, susceptible, infectious.size(), recovered, diagnosed, n, tree});
    }
  }

  out.final_size = static_cast<std::int64_t>(tree.size());
  out.duration = time;
  out.diagnosed = diagnosed;
  return out;
}

bool is_major(const EpidemicOutcome& outcome, std::int64_t n, double major_threshold) {
  return static_cast<double>(outcome.final_size) > major_threshold * static_cast<double>(n);
}

EnsembleResult run_ensemble(const Params& params, std::uint64_t runs, std::uint64_t seed, double major_threshold,
                            unsigned threads) {
  validate(params);
  if (runs < 1) throw Error(ErrorKind::InvalidParams, "ensemble requires runs >= 1");
  if (!(major_threshold > 0 && major_threshold < 1))
    throw Error(ErrorKind::InvalidParams, "major outbreak threshold must lie in (0,1)");

  EnsembleResult result;
  result.outcomes.resize(runs);
  parallel_for(runs, threads, [&](std::size_t r) {
    result.outcomes[r] = run_epidemic(params, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
  });

  EnsembleSummary& s = result.summary;
  s.runs = runs;
  s.major_threshold = major_threshold;
  Moments<1> sizes;
  for (const auto& o : result.outcomes) {
    if (!is_major(o, params.n, major_threshold)) continue;
    ++s.majors;
    sizes.add({static_cast<double>(o.final_size) / static_cast<double>(params.n)});
  }
  s.major_fraction = static_cast<double>(s.majors) / static_cast<double>(runs);
  s.major_fraction_ci = wilson_interval(s.majors, runs);
  s.mean_major_size = sizes.count() > 0 ? sizes.mean(0) : 0.0;
  s.mean_major_size_se = sizes.se(0);
  return result;
}

void write_runs_csv(std::ostream& out, const EnsembleResult& result, std::int64_t n) {
  out << "run_index,final_size,peak_infectious,duration,major_flag\n";
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < result.outcomes.size(); ++r) {
    const auto& o = result.outcomes[r];
    out << r << ',' << o.final_size << ',' << o.peak_infectious << ',' << o.duration << ','
        << (is_major(o, n, result.summary.major_threshold) ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

nlohmann::json summary_to_json(const EnsembleSummary& s, const Params& params) {
  return {{"params", params_to_json(params)},
          {"runs", s.runs},
          {"majors", s.majors},
          {"major_threshold", s.major_threshold},
          {"major_fraction", s.major_fraction},
          {"major_fraction_ci", {s.major_fraction_ci.low, s.major_fraction_ci.high}},
          {"mean_major_size", s.mean_major_size},
          {"mean_major_size_se", s.mean_major_size_se}};
}

}  // namespace ctrace
