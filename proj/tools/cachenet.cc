// cachenet: run experiment plans, inspect topologies, evaluate delay bounds.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cachenet/analysis.h"
#include "cachenet/errors.h"
#include "cachenet/experiment.h"
#include "cachenet/topology.h"

namespace {

using namespace cachenet;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double ToDouble(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("not a number: '" + s + "'");
  }
}

// A GraphML path, or a generator spec: line:N, tree:R:H, er:N:P[:SEED],
// powerlaw:N:GAMMA[:SEED].
Topology OpenTopology(const std::string& spec) {
  const auto parts = Split(spec, ':');
  const auto seed = [&](std::size_t i) {
    return parts.size() > i ? static_cast<std::uint64_t>(ToDouble(parts[i])) : 1;
  };
  if (parts[0] == "line" && parts.size() == 2) {
    return BuildLine(static_cast<std::size_t>(ToDouble(parts[1])));
  }
  if (parts[0] == "tree" && parts.size() == 3) {
    return BuildRegularTree(static_cast<int>(ToDouble(parts[1])),
                            static_cast<int>(ToDouble(parts[2])));
  }
  if (parts[0] == "er" && (parts.size() == 3 || parts.size() == 4)) {
    return BuildErdosRenyi(static_cast<std::size_t>(ToDouble(parts[1])), ToDouble(parts[2]),
                           seed(3));
  }
  if (parts[0] == "powerlaw" && (parts.size() == 3 || parts.size() == 4)) {
    return BuildPowerLaw(static_cast<std::size_t>(ToDouble(parts[1])), ToDouble(parts[2]),
                         seed(3));
  }
  return LoadGraphml(spec);
}

int TopoInfo(const std::string& spec, std::size_t sample_pairs) {
  const Topology t = OpenTopology(spec);
  std::printf("topology   %s\n", KindName(t.kind()).c_str());
  std::printf("nodes      %zu\n", t.node_count());
  std::printf("edges      %zu\n", t.edge_count());
  std::printf("avg_degree %.4f\n", t.average_degree());
  if (t.node_count() <= kExactDistanceLimit) {
    const auto exact = ComputeDistanceModel(t, ExactAllPairs{});
    std::printf("d_bar      %.4f (exact, %zu pairs)\n", exact.d_bar, exact.pairs);
  }
  const std::size_t count = sample_pairs > 0 ? sample_pairs : 100 * t.node_count();
  const auto sampled = ComputeDistanceModel(t, SampledPairs{count, 1});
  std::printf("d_bar      %.4f (sampled, %zu pairs)\n", sampled.d_bar, sampled.pairs);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cachenet: static and dynamic cache placement in networks"};
  app.require_subcommand(1);

  std::string plan_path;
  auto* run = app.add_subcommand("run", "run an experiment plan and write its CSV");
  run->add_option("plan", plan_path, "plan file (YAML)")->required();
  int workers = 0;
  run->add_option("-j,--workers", workers, "worker threads (default: CACHENET_WORKERS or 1)");

  auto* validate = app.add_subcommand("validate", "check a plan without running it");
  validate->add_option("plan", plan_path, "plan file (YAML)")->required();

  auto* topo = app.add_subcommand("topo", "topology utilities");
  topo->require_subcommand(1);
  std::string topo_spec;
  std::size_t sample_pairs = 0;
  auto* info = topo->add_subcommand("info", "print size and average distance");
  info->add_option("file", topo_spec,
                   "GraphML file or generator (line:N, tree:R:H, er:N:P[:SEED], "
                   "powerlaw:N:GAMMA[:SEED])")
      ->required();
  info->add_option("--pairs", sample_pairs, "sampled pairs (default 100 n)");

  std::string export_path;
  auto* exp = topo->add_subcommand("export", "write a topology as GraphML");
  exp->add_option("spec", topo_spec, "GraphML file or generator spec")->required();
  exp->add_option("output", export_path, "GraphML output path")->required();

  auto* bounds = app.add_subcommand("bounds", "evaluate a policy's delay expression");
  std::string policy = "TPPC";
  double alpha = 1.0, d_bar = 0.0;
  std::size_t content_count = 3000;
  std::uint32_t s = 5, d = 10;
  bounds->add_option("--policy", policy, "URP, PPP, TPP, TPPC or LBND")->capture_default_str();
  bounds->add_option("--alpha", alpha, "Zipf exponent")->capture_default_str();
  bounds->add_option("--C", content_count, "catalog size")->capture_default_str();
  bounds->add_option("--s", s, "per-node cache size")->capture_default_str();
  bounds->add_option("--d", d, "routing distance")->capture_default_str();
  bounds->add_option("--d-bar", d_bar, "average distance for the TPP-C cut (default d)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunOptions options;
      options.workers = workers > 0 ? workers : WorkersFromEnvironment();
      const auto plan = LoadPlan(plan_path);
      const auto table = RunPlan(plan, options);
      std::printf("wrote %zu rows to %s\n", table.rows.size(), plan.output_path.c_str());
      return kExitOk;
    }
    if (*validate) {
      const auto diags = ValidatePlan(LoadPlan(plan_path));
      for (const auto& msg : diags) std::printf("%s\n", msg.c_str());
      if (diags.empty()) std::printf("ok\n");
      return diags.empty() ? kExitOk : kExitConfig;
    }
    if (*info) return TopoInfo(topo_spec, sample_pairs);
    if (*exp) {
      const Topology t = OpenTopology(topo_spec);
      std::ofstream out(export_path, std::ios::trunc);
      if (!out) throw ConfigError("cannot write '" + export_path + "'");
      out << ToGraphml(t);
      std::printf("wrote %zu nodes, %zu edges to %s\n", t.node_count(), t.edge_count(),
                  export_path.c_str());
      return kExitOk;
    }
    if (*bounds) {
      const Catalog cat(content_count, alpha);
      const auto report =
          PolicyBound(cat, ParsePolicy(policy), s, d, d_bar > 0.0 ? d_bar : static_cast<double>(d));
      std::printf("%s\n%s\n", kBoundCsvHeader, ToCsvRow(report).c_str());
      std::printf("# regime=%s kind=%s cut=%zu order=%s\n", RegimeName(report.regime).c_str(),
                  BoundKindName(report.kind).c_str(), report.cut, report.order_expr.c_str());
      return kExitOk;
    }
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
