#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cachenet/simulate.h"

namespace cachenet {

// A declarative experiment: either a simulation sweep over one scenario or an
// analysis-only computation.
struct ExperimentPlan {
  std::string id;
  std::string source_path;  // plan file, for diagnostics
  std::string output_path;

  // Simulation plans.
  std::string scenario;  // "I", "II", "III"
  std::vector<std::string> policies;
  ScenarioOverrides base;
  std::vector<std::uint64_t> seeds;
  std::vector<int> cut_layers;  // scenario III; empty means the scenario default
  std::map<std::string, std::vector<double>> sweep;

  // Analysis plans: "table1-slopes" or "bow-sweep".
  std::string analysis;
  std::vector<double> alphas;
  std::uint32_t s = 2;
  int log2_d_min = 4;
  int log2_d_max = 12;
  std::optional<std::size_t> content_count;
  int tree_h = 10;
  std::optional<std::uint64_t> total_budget;

  bool is_analysis() const { return !analysis.empty(); }
};

// Sweepable parameters of a simulation plan.
const std::vector<std::string>& SweepParameters();

// Parses YAML. Syntax errors and unknown keys throw ConfigError; semantic
// feasibility is left to ValidatePlan.
ExperimentPlan ParsePlan(const std::string& yaml_text, const std::string& source = "<string>");
ExperimentPlan LoadPlan(const std::string& path);

// Every feasibility check that can be made without running; empty means
// runnable.
std::vector<std::string> ValidatePlan(const ExperimentPlan& plan);

struct RunOptions {
  int workers = 1;
  bool write_manifest = true;
  std::string timestamp;  // header comment; current UTC time when empty
};

// Worker count from CACHENET_WORKERS, else 1.
int WorkersFromEnvironment();

// Header comment line, column header and sorted rows.
struct CsvTable {
  std::string comment;
  std::string header;
  std::vector<std::string> rows;
  std::string Body() const;  // header and rows, without the comment line
  std::string Text() const;
};

// Validates, runs and returns the table; throws ConfigError when validation
// fails and InvariantError when a run violates an invariant.
CsvTable ExecutePlan(const ExperimentPlan& plan, const RunOptions& options);

// ExecutePlan, then writes plan.output_path (and a manifest JSON beside it).
CsvTable RunPlan(const ExperimentPlan& plan, const RunOptions& options);

inline constexpr const char* kSimCsvHeader =
    "policy,alpha,C,s,d,d_bar,value,kind,seed,slots,policy_dynamic,scenario,topology,"
    "cut_layer,B,warmup_slots,arrival_prob,insert_on,cut_rounding,ci95,requests";
inline constexpr const char* kSlopeCsvHeader =
    "policy,regime,alpha,C,s,d_min,d_max,slope,intercept,r_squared,points,order";
inline constexpr const char* kBowCsvHeader =
    "alpha,C,r,h,B,m,cut_layer,per_node_budget,delta_black,value,best";

}  // namespace cachenet
