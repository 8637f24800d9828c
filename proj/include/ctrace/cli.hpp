#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctrace/component.hpp"
#include "ctrace/params.hpp"
#include "ctrace/sweep.hpp"

namespace ctrace {

enum class OutputFormat { Csv, Json };

struct RunConfig {
  std::string subcommand;
  Params params;
  std::optional<std::string> sweep_name;  // built-in sweep (fig3a, ...)
  std::optional<SweepSpec> sweep_spec;    // sweep from a config file
  std::uint64_t replicates = 1'000'000;
  std::uint64_t runs = 10'000;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;  // 0 = auto
  std::optional<std::string> out;
  OutputFormat format = OutputFormat::Csv;
  bool strict = false;
};

/// Parses argv-style arguments (without the program name). Precedence:
/// flags, then the --config JSON file, then built-in defaults.
RunConfig parse_run_config(const std::vector<std::string>& args);

int cmd_analytic(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_component_mc(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_epidemic(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_table2(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Full entry point: parse, dispatch, report errors. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctrace
