#include "ctrace/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>

#include "ctrace/error.hpp"
#include "ctrace/parallel.hpp"

namespace ctrace {

const char* to_string(Target target) {
  switch (target) {
    case Target::RD: return "R_D";
    case Target::RIndD: return "R_ind_D";
    case Target::RDM: return "R_DM";
    case Target::NaiveProduct: return "NaiveProduct";
  }
  return "unknown";
}

Target target_from_string(const std::string& name) {
  for (Target t : {Target::RD, Target::RIndD, Target::RDM, Target::NaiveProduct})
    if (name == to_string(t)) return t;
  throw Error(ErrorKind::InvalidConfig, "unknown target \"" + name + "\"");
}

bool is_monte_carlo(Target target) { return target == Target::RDM || target == Target::NaiveProduct; }

const char* to_string(Axis axis) {
  switch (axis) {
    case Axis::TestingFraction: return "testing_fraction";
    case Axis::Pi: return "pi";
    case Axis::PiSquared: return "pi_squared";
    case Axis::P: return "p";
    case Axis::Delta: return "delta";
    case Axis::Beta: return "beta";
  }
  return "unknown";
}

Axis axis_from_string(const std::string& name) {
  for (Axis a : {Axis::TestingFraction, Axis::Pi, Axis::PiSquared, Axis::P, Axis::Delta, Axis::Beta})
    if (name == to_string(a)) return a;
  throw Error(ErrorKind::InvalidConfig, "unknown axis \"" + name + "\"");
}

const char* to_string(PointStatus status) {
  switch (status) {
    case PointStatus::Ok: return "ok";
    case PointStatus::CiLimited: return "ci_limited";
    case PointStatus::NoRoot: return "no_root";
    case PointStatus::NonMonotone: return "non_monotone";
    case PointStatus::Divergent: return "divergent";
    case PointStatus::Failed: return "failed";
  }
  return "unknown";
}

namespace {

bool axis_accepts(Axis axis, double v) {
  switch (axis) {
    case Axis::TestingFraction: return v >= 0 && v < 1;
    case Axis::Pi:
    case Axis::PiSquared:
    case Axis::P: return v >= 0 && v <= 1;
    case Axis::Delta:
    case Axis::Beta: return v >= 0 && std::isfinite(v);
  }
  return false;
}

PointStatus status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::NoStraddle: return PointStatus::NoRoot;
    case ErrorKind::NonMonotone: return PointStatus::NonMonotone;
    case ErrorKind::SeriesDivergent: return PointStatus::Divergent;
    default: return PointStatus::Failed;
  }
}

}  // namespace

Params set_coordinate(Params params, Axis axis, double value) {
  if (!axis_accepts(axis, value)) {
    std::ostringstream msg;
    msg << to_string(axis) << " value " << value << " out of range";
    throw Error(ErrorKind::InvalidConfig, msg.str());
  }
  switch (axis) {
    case Axis::TestingFraction: return with_testing_fraction(params, value);
    case Axis::Pi: params.pi = value; break;
    case Axis::PiSquared: params.pi = std::sqrt(value); break;
    case Axis::P: params.p = value; break;
    case Axis::Delta: params.delta = value; break;
    case Axis::Beta: params.beta = value; break;
  }
  return params;
}

double get_coordinate(const Params& params, Axis axis) {
  switch (axis) {
    case Axis::TestingFraction: return params.delta / (params.delta + params.gamma);
    case Axis::Pi: return params.pi;
    case Axis::PiSquared: return params.pi * params.pi;
    case Axis::P: return params.p;
    case Axis::Delta: return params.delta;
    case Axis::Beta: return params.beta;
  }
  return 0;
}

std::vector<double> AxisRange::values() const {
  std::vector<double> out(resolution);
  for (int i = 0; i < resolution; ++i)
    out[i] = i + 1 == resolution ? hi : lo + (hi - lo) * static_cast<double>(i) / (resolution - 1);
  return out;
}

Evaluation evaluate(Target target, const Params& params, const SolveOptions& options, std::uint64_t replicates) {
  Evaluation e;
  if (!is_monte_carlo(target)) {
    e.value = target == Target::RD ? r_component_digital(params, options.series)
                                   : r_individual_digital(params, options.series);
    e.ci = {e.value, e.value};
    return e;
  }
  McSettings mc = options.mc;
  mc.replicates = replicates > 0 ? replicates : options.mc.replicates;
  mc.seed = derive_seed_for_point(options.mc.seed, {params.beta, params.gamma, params.delta, params.pi, params.p});
  mc.bootstrap_resamples = 0;
  e.replicates = mc.replicates;
  if (target == Target::RDM) {
    const CombinedR r = r_component_combined(params, mc);
    e.value = r.value;
    e.se = r.se;
    e.ci = r.ci;
  } else {
    const NaiveProduct r = naive_combined_r(params, mc, options.series);
    e.value = r.value;
    e.se = r.se;
    e.ci = r.ci;
  }
  return e;
}

namespace {

// Evaluates the target on a grid over the bracket and returns the grid cell
// holding the only crossing of 1. Points whose CI contains 1 are ambiguous
// and do not count. More than one crossing means bisection cannot be trusted.
Interval prescan_crossing(Target target, Axis axis, Interval bracket, const Params& fixed,
                          const SolveOptions& options) {
  const int n = std::max(3, options.prescan_points);
  int last_side = 0, crossings = 0;
  double last_x = bracket.low;
  Interval cell = bracket;
  for (int i = 0; i < n; ++i) {
    const double x = bracket.low + (bracket.high - bracket.low) * i / (n - 1);
    const Evaluation e = evaluate(target, set_coordinate(fixed, axis, x), options);
    const int side = e.ci.low > 1 ? 1 : e.ci.high < 1 ? -1 : 0;
    if (side == 0) continue;
    if (last_side != 0 && side != last_side) {
      if (++crossings > 1) {
        std::ostringstream msg;
        msg << to_string(target) << " crosses 1 more than once in " << to_string(axis) << " over [" << bracket.low
            << ", " << bracket.high << "]; use a grid scan instead";
        throw Error(ErrorKind::NonMonotone, msg.str());
      }
      cell = {last_x, x};
    }
    last_side = side;
    last_x = x;
  }
  return cell;
}

[[noreturn]] void throw_no_straddle(Target target, Axis axis, Interval bracket, double lo, double hi) {
  std::ostringstream msg;
  msg << to_string(target) << " does not cross 1 for " << to_string(axis) << " in [" << bracket.low << ", "
      << bracket.high << "] (values " << lo << ", " << hi << ")";
  throw Error(ErrorKind::NoStraddle, msg.str());
}

CurvePoint solve_deterministic(Target target, Axis axis, Interval bracket, const Params& fixed,
                               const SolveOptions& options) {
  auto f = [&](double x) { return evaluate(target, set_coordinate(fixed, axis, x), options).value - 1; };
  double lo = bracket.low, hi = bracket.high;
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo * f_hi > 0) throw_no_straddle(target, axis, bracket, f_lo + 1, f_hi + 1);

  CurvePoint point;
  double x = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  double fx = std::abs(f_lo) <= std::abs(f_hi) ? f_lo : f_hi;
  for (int iter = 0; iter < 200 && std::abs(fx) > options.tol; ++iter) {
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    x = mid;
    fx = f_mid;
    if ((f_mid < 0) == (f_lo < 0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  point.critical = x;
  point.residual = std::abs(fx);
  point.ci = {fx + 1, fx + 1};
  point.bracket = {lo, hi};
  if (point.residual > options.tol) {
    point.status = PointStatus::Failed;
    point.message = "bracket collapsed before reaching the residual tolerance";
  }
  return point;
}

CurvePoint solve_monte_carlo(Target target, Axis axis, Interval bracket, const Params& fixed,
                             const SolveOptions& options) {
  auto eval = [&](double x, std::uint64_t reps, const SolveOptions& opts) {
    return evaluate(target, set_coordinate(fixed, axis, x), opts, reps);
  };
  const std::uint64_t base = options.mc.replicates;
  double lo = bracket.low, hi = bracket.high;
  const Evaluation e_lo = eval(lo, base, options);
  const Evaluation e_hi = eval(hi, base, options);
  if ((e_lo.value - 1) * (e_hi.value - 1) > 0) throw_no_straddle(target, axis, bracket, e_lo.value, e_hi.value);

  SolveOptions resample = options;
  resample.mc.seed = derive_seed(options.mc.seed, {0x7e5a3b1eULL});
  const Evaluation r_lo = eval(lo, base, resample);
  const Evaluation r_hi = eval(hi, base, resample);
  if ((r_lo.value > 1) != (e_lo.value > 1) || (r_hi.value > 1) != (e_hi.value > 1)) {
    throw Error(ErrorKind::NonMonotone, std::string(to_string(target)) +
                                            " endpoint estimates disagree on resampling; use a grid scan instead");
  }
  const bool lo_above = e_lo.value > 1;

  CurvePoint point;
  while (hi - lo > options.coord_tol) {
    const double mid = lo + (hi - lo) / 2;
    std::uint64_t reps = base;
    Evaluation e = eval(mid, reps, options);
    while (e.ci.contains(1.0) && reps * 4 <= options.mc_budget) {
      reps *= 4;
      e = eval(mid, reps, options);
    }
    if (e.ci.contains(1.0)) {
      point.critical = mid;
      point.residual = std::abs(e.value - 1);
      point.ci = e.ci;
      point.bracket = {lo, hi};
      point.replicates = reps;
      point.status = PointStatus::CiLimited;
      point.message = "confidence interval contains 1 at the replicate budget";
      return point;
    }
    if ((e.value > 1) == lo_above) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  point.critical = lo + (hi - lo) / 2;
  const Evaluation e = eval(point.critical, base, options);
  point.residual = std::abs(e.value - 1);
  point.ci = e.ci;
  point.bracket = {lo, hi};
  point.replicates = base;
  return point;
}

}  // namespace

CurvePoint find_critical(Target target, Axis solve_axis, Interval bracket, const Params& fixed,
                         const SolveOptions& options) {
  if (!(bracket.low < bracket.high) || !axis_accepts(solve_axis, bracket.low) ||
      !axis_accepts(solve_axis, bracket.high))
    throw Error(ErrorKind::InvalidConfig, std::string("invalid bracket for ") + to_string(solve_axis));
  if (options.prescan || solve_axis == Axis::Pi || solve_axis == Axis::PiSquared)
    bracket = prescan_crossing(target, solve_axis, bracket, fixed, options);
  return is_monte_carlo(target) ? solve_monte_carlo(target, solve_axis, bracket, fixed, options)
                                : solve_deterministic(target, solve_axis, bracket, fixed, options);
}

void validate_spec(const SweepSpec& spec) {
  auto check_range = [](const AxisRange& r, const char* what) {
    if (r.resolution < 2) throw Error(ErrorKind::InvalidConfig, std::string(what) + " resolution must be >= 2");
    if (!axis_accepts(r.axis, r.lo) || !axis_accepts(r.axis, r.hi) || r.lo > r.hi)
      throw Error(ErrorKind::InvalidConfig, std::string(what) + " range outside parameter bounds");
  };
  validate(spec.fixed);
  check_range(spec.free_axis, "free axis");
  if (spec.kind == JobKind::Heatmap) {
    if (!spec.second_axis) throw Error(ErrorKind::InvalidConfig, "heatmap needs a second axis");
    check_range(*spec.second_axis, "second axis");
  }
  if (spec.kind == JobKind::Profile && spec.profile_targets.empty())
    throw Error(ErrorKind::InvalidConfig, "profile needs at least one target");
  if (spec.kind == JobKind::Curve && spec.solve_axis == spec.free_axis.axis)
    throw Error(ErrorKind::InvalidConfig, "solve axis must differ from the free axis");
}

std::vector<CurvePoint> critical_curve(const SweepSpec& spec) {
  validate_spec(spec);
  const auto xs = spec.free_axis.values();
  std::vector<CurvePoint> curve(xs.size());
  auto solve_one = [&](std::size_t i) {
    CurvePoint& point = curve[i];
    try {
      const Params base = set_coordinate(spec.fixed, spec.free_axis.axis, xs[i]);
      point = find_critical(spec.target, spec.solve_axis, spec.solve_bracket, base, spec.solve);
    } catch (const Error& e) {
      point = CurvePoint{};
      point.status = status_for(e);
      point.message = e.what();
    }
    point.abscissa = xs[i];
  };
  // Monte Carlo points parallelise internally.
  if (is_monte_carlo(spec.target)) {
    for (std::size_t i = 0; i < xs.size(); ++i) solve_one(i);
  } else {
    parallel_for(xs.size(), spec.solve.mc.threads, solve_one);
  }
  return curve;
}

std::vector<GridCell> heatmap_grid(const SweepSpec& spec) {
  validate_spec(spec);
  if (!spec.second_axis) throw Error(ErrorKind::InvalidConfig, "heatmap needs a second axis");
  const auto xs = spec.free_axis.values();
  const auto ys = spec.second_axis->values();
  std::vector<GridCell> grid(xs.size() * ys.size());
  auto fill = [&](std::size_t c) {
    GridCell& cell = grid[c];
    cell.x = xs[c % xs.size()];
    cell.y = ys[c / xs.size()];
    try {
      Params params = set_coordinate(spec.fixed, spec.free_axis.axis, cell.x);
      params = set_coordinate(params, spec.second_axis->axis, cell.y);
      cell.eval = evaluate(spec.target, params, spec.solve);
    } catch (const Error& e) {
      cell.status = status_for(e);
      cell.message = e.what();
    }
  };
  if (is_monte_carlo(spec.target)) {
    for (std::size_t c = 0; c < grid.size(); ++c) fill(c);
  } else {
    parallel_for(grid.size(), spec.solve.mc.threads, fill);
  }
  return grid;
}

std::vector<ProfileRow> profile(const SweepSpec& spec) {
  validate_spec(spec);
  const auto xs = spec.free_axis.values();
  std::vector<ProfileRow> rows(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    rows[i].abscissa = xs[i];
    for (Target t : spec.profile_targets) {
      Evaluation e;
      PointStatus status = PointStatus::Ok;
      try {
        e = evaluate(t, set_coordinate(spec.fixed, spec.free_axis.axis, xs[i]), spec.solve);
      } catch (const Error& err) {
        status = status_for(err);
      }
      rows[i].values.push_back(e);
      rows[i].status.push_back(status);
    }
  }
  return rows;
}

namespace {

struct PrecisionGuard {
  std::ostream& out;
  std::streamsize saved;
  explicit PrecisionGuard(std::ostream& o) : out(o), saved(o.precision(12)) {}
  ~PrecisionGuard() { out.precision(saved); }
};

bool has_value(PointStatus s) { return s == PointStatus::Ok || s == PointStatus::CiLimited; }

}  // namespace

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  PrecisionGuard guard(out);
  out << "abscissa,critical_value,residual,ci_low,ci_high,status\n";
  for (const auto& p : curve) {
    out << p.abscissa << ',';
    if (has_value(p.status)) {
      out << p.critical << ',' << p.residual << ',' << p.ci.low << ',' << p.ci.high;
    } else {
      out << ",,,";
    }
    out << ',' << to_string(p.status) << '\n';
  }
}

void write_heatmap_csv(std::ostream& out, const std::vector<GridCell>& grid) {
  PrecisionGuard guard(out);
  out << "axis1,axis2,value,ci_low,ci_high,status\n";
  for (const auto& c : grid) {
    out << c.x << ',' << c.y << ',';
    if (c.status == PointStatus::Ok) {
      out << c.eval.value << ',' << c.eval.ci.low << ',' << c.eval.ci.high;
    } else {
      out << ",,";
    }
    out << ',' << to_string(c.status) << '\n';
  }
}

void write_profile_csv(std::ostream& out, const SweepSpec& spec, const std::vector<ProfileRow>& rows) {
  PrecisionGuard guard(out);
  out << to_string(spec.free_axis.axis);
  for (Target t : spec.profile_targets) out << ',' << to_string(t);
  out << '\n';
  for (const auto& row : rows) {
    out << row.abscissa;
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      out << ',';
      if (row.status[i] == PointStatus::Ok) {
        out << row.values[i].value;
      } else {
        out << to_string(row.status[i]);
      }
    }
    out << '\n';
  }
}

namespace {

Params figure_params(double delta) {
  Params p;
  p.beta = 6.0 / 7;
  p.gamma = 1.0 / 7;
  p.delta = delta;
  return p;
}

SweepSpec digital_critical(const std::string& name, Axis abscissa) {
  SweepSpec s;
  s.name = name;
  s.kind = JobKind::Curve;
  s.target = Target::RD;
  s.free_axis = {abscissa, 0.1, 1.0, 10};
  s.solve_axis = Axis::TestingFraction;
  s.solve_bracket = {1e-4, 0.95};
  s.fixed = figure_params(1.0 / 7);
  return s;
}

SweepSpec manual_critical() {
  SweepSpec s;
  s.name = "manual_critical";
  s.kind = JobKind::Curve;
  s.target = Target::RDM;
  s.free_axis = {Axis::P, 0.1, 1.0, 10};
  s.solve_axis = Axis::TestingFraction;
  s.solve_bracket = {0.05, 0.95};
  s.fixed = figure_params(1.0 / 7);
  s.fixed.pi = 0;
  return s;
}

std::vector<SweepSpec> combined_figure(double delta) {
  SweepSpec heat;
  heat.name = "rdm_heatmap";
  heat.kind = JobKind::Heatmap;
  heat.target = Target::RDM;
  heat.free_axis = {Axis::P, 0, 1, 11};
  heat.second_axis = AxisRange{Axis::Pi, 0, 1, 11};
  heat.fixed = figure_params(delta);

  SweepSpec purple;
  purple.name = "rdm_critical";
  purple.kind = JobKind::Curve;
  purple.target = Target::RDM;
  purple.free_axis = {Axis::Pi, 0, 1, 11};
  purple.solve_axis = Axis::P;
  purple.solve_bracket = {0, 1};
  purple.fixed = figure_params(delta);

  SweepSpec white = purple;
  white.name = "naive_critical";
  white.target = Target::NaiveProduct;
  return {heat, purple, white};
}

}  // namespace

std::vector<std::string> named_sweep_names() { return {"fig3a", "fig3b", "fig4", "fig5a", "fig5b"}; }

std::vector<SweepSpec> named_sweeps(const std::string& name) {
  if (name == "fig3a") {
    SweepSpec heat;
    heat.name = "rd_heatmap";
    heat.kind = JobKind::Heatmap;
    heat.target = Target::RD;
    heat.free_axis = {Axis::TestingFraction, 0, 5.0 / 6, 26};
    heat.second_axis = AxisRange{Axis::Pi, 0, 1, 26};
    heat.fixed = figure_params(1.0 / 7);
    SweepSpec ind = heat;
    ind.name = "rind_heatmap";
    ind.target = Target::RIndD;
    return {heat, ind, digital_critical("rd_critical", Axis::Pi), manual_critical()};
  }
  if (name == "fig3b") return {digital_critical("rd_critical_pi_squared", Axis::PiSquared), manual_critical()};
  if (name == "fig4") {
    SweepSpec prof;
    prof.name = "profile";
    prof.kind = JobKind::Profile;
    prof.profile_targets = {Target::RD, Target::RIndD};
    prof.free_axis = {Axis::Pi, 0, 1, 101};
    prof.fixed = figure_params(1.0 / 7);
    SweepSpec rd_root;
    rd_root.name = "rd_root";
    rd_root.kind = JobKind::Curve;
    rd_root.target = Target::RD;
    rd_root.free_axis = {Axis::TestingFraction, 0.3, 0.7, 5};
    rd_root.solve_axis = Axis::Pi;
    rd_root.solve_bracket = {0, 1};
    rd_root.fixed = figure_params(1.0 / 7);
    SweepSpec ind_root = rd_root;
    ind_root.name = "rind_root";
    ind_root.target = Target::RIndD;
    return {prof, rd_root, ind_root};
  }
  if (name == "fig5a") return combined_figure(1.0 / 7);
  if (name == "fig5b") return combined_figure(1.0 / 28);
  throw Error(ErrorKind::InvalidConfig, "unknown named sweep \"" + name + "\"");
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(ErrorKind::InvalidConfig, "unknown key \"" + key + "\" in " + where);
}

AxisRange range_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"name", "lo", "hi", "resolution"}, "axis");
  AxisRange r;
  r.axis = axis_from_string(j.at("name").get<std::string>());
  r.lo = j.at("lo").get<double>();
  r.hi = j.at("hi").get<double>();
  r.resolution = j.value("resolution", 11);
  return r;
}

}  // namespace

SweepSpec spec_from_json(const nlohmann::json& j) {
  try {
    reject_unknown(j,
                   {"name", "kind", "target", "targets", "free_axis", "second_axis", "solve", "fixed", "tol",
                    "coord_tol", "mc"},
                   "sweep spec");
    SweepSpec s;
    s.name = j.value("name", "sweep");
    const std::string kind = j.value("kind", "curve");
    if (kind == "curve") {
      s.kind = JobKind::Curve;
    } else if (kind == "heatmap") {
      s.kind = JobKind::Heatmap;
    } else if (kind == "profile") {
      s.kind = JobKind::Profile;
    } else {
      throw Error(ErrorKind::InvalidConfig, "unknown sweep kind \"" + kind + "\"");
    }
    if (j.contains("target")) s.target = target_from_string(j["target"].get<std::string>());
    if (j.contains("targets"))
      for (const auto& t : j["targets"]) s.profile_targets.push_back(target_from_string(t.get<std::string>()));
    s.free_axis = range_from_json(j.at("free_axis"));
    if (j.contains("second_axis")) s.second_axis = range_from_json(j["second_axis"]);
    if (j.contains("solve")) {
      const auto& solve = j["solve"];
      reject_unknown(solve, {"name", "lo", "hi"}, "solve");
      s.solve_axis = axis_from_string(solve.at("name").get<std::string>());
      s.solve_bracket = {solve.at("lo").get<double>(), solve.at("hi").get<double>()};
    }
    if (j.contains("fixed")) s.fixed = params_from_json(j["fixed"], s.fixed);
    s.solve.tol = j.value("tol", s.solve.tol);
    s.solve.coord_tol = j.value("coord_tol", s.solve.coord_tol);
    if (j.contains("mc")) {
      const auto& mc = j["mc"];
      reject_unknown(mc, {"replicates", "seed", "budget", "threads"}, "mc");
      s.solve.mc.replicates = mc.value("replicates", s.solve.mc.replicates);
      s.solve.mc.seed = mc.value("seed", s.solve.mc.seed);
      s.solve.mc.threads = mc.value("threads", s.solve.mc.threads);
      s.solve.mc_budget = mc.value("budget", s.solve.mc_budget);
    }
    validate_spec(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("malformed sweep spec: ") + e.what());
  }
}

}  // namespace ctrace
