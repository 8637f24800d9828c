#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctrace/component.hpp"
#include "ctrace/digital.hpp"
#include "ctrace/params.hpp"
#include "ctrace/stats.hpp"

#include "json.hpp"

namespace ctrace {

enum class Target { RD, RIndD, RDM, NaiveProduct };

const char* to_string(Target target);
Target target_from_string(const std::string& name);
bool is_monte_carlo(Target target);

/// Coordinates a sweep can vary. PiSquared sets pi = sqrt(value).
enum class Axis { TestingFraction, Pi, PiSquared, P, Delta, Beta };

const char* to_string(Axis axis);
Axis axis_from_string(const std::string& name);

/// Returns params with the given coordinate set; throws on out-of-range values.
Params set_coordinate(Params params, Axis axis, double value);
double get_coordinate(const Params& params, Axis axis);

struct AxisRange {
  Axis axis = Axis::Pi;
  double lo = 0;
  double hi = 1;
  int resolution = 11;

  std::vector<double> values() const;
};

struct SolveOptions {
  double tol = 1e-10;       // |R - 1| for deterministic targets
  double coord_tol = 2e-3;  // final bracket width for Monte Carlo targets
  McSettings mc{100'000};
  std::uint64_t mc_budget = 1'600'000;  // largest replicate count after escalation
  SeriesControl series;
  int prescan_points = 41;
  bool prescan = false;     // crossing pre-scan; forced on when solving in pi or pi^2
};

enum class PointStatus { Ok, CiLimited, NoRoot, NonMonotone, Divergent, Failed };

const char* to_string(PointStatus status);

/// Value of a target at one parameter point.
struct Evaluation {
  double value = 0;
  double se = 0;
  Interval ci;  // degenerate for deterministic targets
  std::uint64_t replicates = 0;
};

/// Evaluates target at params. Monte Carlo targets use `replicates` per root
/// type and a seed derived from the options' seed and the point itself.
Evaluation evaluate(Target target, const Params& params, const SolveOptions& options, std::uint64_t replicates = 0);

struct CurvePoint {
  double abscissa = 0;
  double critical = 0;
  double residual = 0;  // |R - 1| at the critical coordinate
  Interval ci;          // CI of R at the critical coordinate (Monte Carlo)
  Interval bracket;     // final bisection bracket in the solve coordinate
  std::uint64_t replicates = 0;
  PointStatus status = PointStatus::Ok;
  std::string message;
};

/// Finds the coordinate in `bracket` at which target equals 1, all other
/// parameters taken from `fixed`. Throws Error(NoStraddle) when the bracket
/// does not straddle 1 and Error(NonMonotone) when a pre-scan finds more than
/// one crossing of 1 or endpoint resampling flips the side of 1.
CurvePoint find_critical(Target target, Axis solve_axis, Interval bracket, const Params& fixed,
                         const SolveOptions& options = {});

enum class JobKind { Curve, Heatmap, Profile };

struct SweepSpec {
  std::string name = "sweep";
  JobKind kind = JobKind::Curve;
  Target target = Target::RD;
  std::vector<Target> profile_targets;  // Profile jobs only
  AxisRange free_axis;
  std::optional<AxisRange> second_axis;  // Heatmap rows
  Axis solve_axis = Axis::TestingFraction;
  Interval solve_bracket{0, 1};
  Params fixed;
  SolveOptions solve;
};

/// Throws Error(InvalidConfig) on resolution < 2 or out-of-bounds ranges.
void validate_spec(const SweepSpec& spec);

/// find_critical for every abscissa; failures become status markers.
std::vector<CurvePoint> critical_curve(const SweepSpec& spec);

struct GridCell {
  double x = 0;
  double y = 0;
  Evaluation eval;
  PointStatus status = PointStatus::Ok;
  std::string message;
};

/// Row-major grid (rows follow second_axis, columns free_axis).
std::vector<GridCell> heatmap_grid(const SweepSpec& spec);

struct ProfileRow {
  double abscissa = 0;
  std::vector<Evaluation> values;
  std::vector<PointStatus> status;
};

std::vector<ProfileRow> profile(const SweepSpec& spec);

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);
void write_heatmap_csv(std::ostream& out, const std::vector<GridCell>& grid);
void write_profile_csv(std::ostream& out, const SweepSpec& spec, const std::vector<ProfileRow>& rows);

/// Built-in sweeps reproducing the data behind the figures: fig3a, fig3b,
/// fig4, fig5a, fig5b. Each returns one spec per output file.
std::vector<SweepSpec> named_sweeps(const std::string& name);
std::vector<std::string> named_sweep_names();

SweepSpec spec_from_json(const nlohmann::json& j);

}  // namespace ctrace
