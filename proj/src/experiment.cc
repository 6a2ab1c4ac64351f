#include "cachenet/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "cachenet/analysis.h"
#include "cachenet/csv.h"
#include "cachenet/errors.h"
#include "json.hpp"

namespace cachenet {

namespace fs = std::filesystem;

const std::vector<std::string>& SweepParameters() {
  static const std::vector<std::string> kParams = {"alpha", "arrival_prob", "content_count",
                                                   "cut_layer", "s", "slots"};
  return kParams;
}

namespace {

const std::set<std::string> kPlanKeys = {
    "id",           "output",       "scenario",      "policies",   "seeds",
    "seed_count",   "sweep",        "alpha",         "topology_file", "tree_h",
    "content_count", "s",           "total_budget",  "slots",      "warmup_fraction",
    "arrival_prob", "insert_on",    "cut_rounding",  "analysis",   "alphas",
    "log2_d_min",   "log2_d_max"};

template <typename T>
T Scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("plan key '" + key + "' has an invalid value");
  }
}

template <typename T>
std::vector<T> List(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError("plan key '" + key + "' must be a list");
  std::vector<T> out;
  for (const auto& item : node) out.push_back(Scalar<T>(item, key));
  return out;
}

std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool IsWholeNumber(double x) { return std::isfinite(x) && x == std::floor(x); }

std::string InsertOnName(InsertOn mode) {
  return mode == InsertOn::kDelivery ? "delivery" : "first_hop";
}

std::string RoundingName(CutRounding r) {
  switch (r) {
    case CutRounding::kCeil: return "ceil";
    case CutRounding::kFloor: return "floor";
    case CutRounding::kNearest: return "nearest";
    case CutRounding::kFloorDistance: return "floor_distance";
  }
  return "?";
}

template <typename Fn>
void ParallelFor(std::size_t count, int workers, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads =
      static_cast<int>(std::min<std::size_t>(std::max(1, workers), std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// One assignment of the swept parameters (cut_layer excluded).
using SweepPoint = std::vector<std::pair<std::string, double>>;

std::vector<SweepPoint> ExpandSweep(const std::map<std::string, std::vector<double>>& sweep) {
  std::vector<SweepPoint> points = {{}};
  for (const auto& [name, values] : sweep) {
    if (name == "cut_layer") continue;
    std::vector<SweepPoint> next;
    for (const auto& p : points) {
      for (double v : values) {
        auto q = p;
        q.emplace_back(name, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

ScenarioOverrides Apply(const ScenarioOverrides& base, const SweepPoint& point) {
  ScenarioOverrides o = base;
  for (const auto& [name, v] : point) {
    if (name == "alpha") o.alpha = v;
    else if (name == "arrival_prob") o.arrival_prob = v;
    else if (name == "content_count") o.content_count = static_cast<std::size_t>(v);
    else if (name == "s") o.s = static_cast<std::uint32_t>(v);
    else if (name == "slots") o.slots = static_cast<std::uint64_t>(v);
  }
  return o;
}

std::string CutMessage(int c, int h) {
  return "cut layer exceeds tree height (c=" + std::to_string(c) + ", h=" + std::to_string(h) + ")";
}

std::string BowMessage(std::uint64_t budget, std::size_t black) {
  return "BoW needs at least one cache slot per black node (B=" + std::to_string(budget) +
         " < " + std::to_string(black) + " black nodes)";
}

}  // namespace

ExperimentPlan ParsePlan(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": invalid YAML: " + e.what());
  }
  if (!root.IsMap()) throw ConfigError(source + ": plan must be a mapping");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!kPlanKeys.count(key)) throw ConfigError(source + ": unknown plan key '" + key + "'");
  }
  ExperimentPlan plan;
  plan.source_path = source;
  auto get = [&](const char* key) { return root[key]; };
  if (get("id")) plan.id = Scalar<std::string>(get("id"), "id");
  if (get("output")) plan.output_path = Scalar<std::string>(get("output"), "output");
  if (get("analysis")) plan.analysis = Scalar<std::string>(get("analysis"), "analysis");
  if (get("scenario")) plan.scenario = Scalar<std::string>(get("scenario"), "scenario");
  if (get("policies")) plan.policies = List<std::string>(get("policies"), "policies");
  if (get("seeds") && get("seed_count")) {
    throw ConfigError(source + ": give either seeds or seed_count, not both");
  }
  if (get("seeds")) {
    for (auto v : List<long long>(get("seeds"), "seeds")) {
      if (v < 0) throw ConfigError(source + ": seeds must be nonnegative");
      plan.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  } else {
    const int count = get("seed_count") ? Scalar<int>(get("seed_count"), "seed_count") : 10;
    for (int k = 1; k <= count; ++k) plan.seeds.push_back(static_cast<std::uint64_t>(k));
  }
  if (get("sweep")) {
    const auto sweep = get("sweep");
    if (!sweep.IsMap()) throw ConfigError(source + ": sweep must be a mapping");
    const auto& allowed = SweepParameters();
    for (const auto& kv : sweep) {
      const auto name = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
        throw ConfigError(source + ": unknown sweep parameter '" + name + "'");
      }
      plan.sweep[name] = List<double>(kv.second, "sweep." + name);
    }
    if (plan.sweep.count("cut_layer")) {
      for (double c : plan.sweep["cut_layer"]) plan.cut_layers.push_back(static_cast<int>(c));
    }
  }
  auto& o = plan.base;
  if (get("alpha")) o.alpha = Scalar<double>(get("alpha"), "alpha");
  if (get("topology_file")) {
    auto file = Scalar<std::string>(get("topology_file"), "topology_file");
    const fs::path p(file);
    if (p.is_relative() && source != "<string>") {
      file = (fs::path(source).parent_path() / p).lexically_normal().string();
    }
    o.topology_file = file;
  }
  if (get("tree_h")) {
    o.tree_h = Scalar<int>(get("tree_h"), "tree_h");
    plan.tree_h = *o.tree_h;
  }
  if (get("content_count")) {
    const auto c = Scalar<long long>(get("content_count"), "content_count");
    if (c < 1) throw ConfigError(source + ": content_count must be at least 1");
    o.content_count = static_cast<std::size_t>(c);
    plan.content_count = o.content_count;
  }
  if (get("s")) {
    const auto s = Scalar<long long>(get("s"), "s");
    if (s < 1) throw ConfigError(source + ": s must be at least 1");
    o.s = static_cast<std::uint32_t>(s);
    plan.s = *o.s;
  }
  if (get("total_budget")) {
    const auto b = Scalar<long long>(get("total_budget"), "total_budget");
    if (b < 0) throw ConfigError(source + ": total_budget must be nonnegative");
    o.total_budget = static_cast<std::uint64_t>(b);
    plan.total_budget = o.total_budget;
  }
  if (get("slots")) o.slots = Scalar<std::uint64_t>(get("slots"), "slots");
  if (get("warmup_fraction")) o.warmup_fraction = Scalar<double>(get("warmup_fraction"), "warmup_fraction");
  if (get("arrival_prob")) o.arrival_prob = Scalar<double>(get("arrival_prob"), "arrival_prob");
  if (get("insert_on")) {
    const auto mode = Scalar<std::string>(get("insert_on"), "insert_on");
    if (mode == "delivery") o.insert_on = InsertOn::kDelivery;
    else if (mode == "first_hop") o.insert_on = InsertOn::kFirstHop;
    else throw ConfigError(source + ": insert_on must be delivery or first_hop");
  }
  if (get("cut_rounding")) {
    o.rounding = ParseCutRounding(Scalar<std::string>(get("cut_rounding"), "cut_rounding"));
  }
  if (get("alphas")) plan.alphas = List<double>(get("alphas"), "alphas");
  if (get("log2_d_min")) plan.log2_d_min = Scalar<int>(get("log2_d_min"), "log2_d_min");
  if (get("log2_d_max")) plan.log2_d_max = Scalar<int>(get("log2_d_max"), "log2_d_max");
  return plan;
}

ExperimentPlan LoadPlan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParsePlan(ss.str(), path);
}

std::vector<std::string> ValidatePlan(const ExperimentPlan& plan) {
  std::vector<std::string> diags;
  auto add = [&](const std::string& msg) { diags.push_back(msg); };
  if (plan.id.empty()) add("plan needs an id");
  if (plan.output_path.empty()) {
    add("plan needs an output path");
  } else if (fs::is_directory(plan.output_path)) {
    add("output path '" + plan.output_path + "' is a directory");
  }

  if (plan.is_analysis()) {
    if (!plan.scenario.empty()) add("analysis plans take no scenario");
    if (plan.alphas.empty()) add("analysis plan needs a non-empty alphas list");
    for (double a : plan.alphas) {
      if (!(a >= 0.0) || !std::isfinite(a)) add("alpha must be a finite nonnegative number");
    }
    if (plan.analysis == "table1-slopes") {
      if (plan.log2_d_min < 0 || plan.log2_d_max > 30 || plan.log2_d_max - plan.log2_d_min < 3) {
        add("table1-slopes needs 0 <= log2_d_min and log2_d_max - log2_d_min >= 3 (at most 30)");
      }
    } else if (plan.analysis == "bow-sweep") {
      if (plan.tree_h < 1 || plan.tree_h > 20) add("bow-sweep needs 1 <= tree_h <= 20");
      if (plan.total_budget && *plan.total_budget < 1) add(BowMessage(*plan.total_budget, 1));
    } else {
      add("unknown analysis '" + plan.analysis + "' (expected table1-slopes or bow-sweep)");
    }
    return diags;
  }

  if (plan.scenario != "I" && plan.scenario != "II" && plan.scenario != "III") {
    add("unknown scenario '" + plan.scenario + "' (expected I, II or III)");
    return diags;
  }
  if (plan.seeds.empty()) add("plan needs at least one seed");
  if (plan.policies.empty()) add("plan needs at least one policy");
  for (const auto& name : plan.policies) {
    try {
      const auto choice = ParsePolicyChoice(name);
      if (const auto* k = std::get_if<PolicyKind>(&choice); k && *k == PolicyKind::kLBND) {
        add("LBND is an analytical reference and cannot be simulated");
      }
    } catch (const ConfigError& e) {
      add(e.what());
    }
  }
  const auto& o = plan.base;
  std::vector<double> alphas = plan.sweep.count("alpha") ? plan.sweep.at("alpha")
                                                         : std::vector<double>{o.alpha.value_or(1.0)};
  for (double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) add("alpha must be a finite nonnegative number");
  }
  for (const auto& [name, values] : plan.sweep) {
    if (values.empty()) add("sweep parameter '" + name + "' has no values");
    for (double v : values) {
      if (name == "arrival_prob" && !(v > 0.0 && v <= 1.0)) add("arrival_prob must lie in (0, 1]");
      if ((name == "content_count" || name == "s" || name == "slots") && !(IsWholeNumber(v) && v >= 1)) {
        add("sweep parameter '" + name + "' needs positive integers");
      }
      if (name == "cut_layer" && !IsWholeNumber(v)) add("cut_layer values must be integers");
    }
  }
  if (o.arrival_prob && !(*o.arrival_prob > 0.0 && *o.arrival_prob <= 1.0)) {
    add("arrival_prob must lie in (0, 1]");
  }
  if (o.slots && *o.slots < 1) add("slots must be positive");
  if (o.warmup_fraction && !(*o.warmup_fraction >= 0.0 && *o.warmup_fraction < 1.0)) {
    add("warmup_fraction must lie in [0, 1)");
  }
  if (plan.scenario != "III") {
    if (o.total_budget) add("total_budget applies to scenario III only");
    if (!plan.cut_layers.empty()) add("cut_layer applies to scenario III only");
    if (o.tree_h) add("tree_h applies to scenario III only");
  }
  if (plan.scenario == "II") {
    if (!o.topology_file || o.topology_file->empty()) {
      add("scenario II needs a topology_file (GraphML)");
    } else if (!fs::exists(*o.topology_file)) {
      add("missing GraphML file '" + *o.topology_file + "'");
    } else {
      try {
        LoadGraphml(*o.topology_file);
      } catch (const ConfigError& e) {
        add(e.what());
      }
    }
  }
  if (plan.scenario == "III") {
    const int h = o.tree_h.value_or(15);
    if (h < 1 || h > 20) {
      add("scenario III needs 1 <= tree_h <= 20");
      return diags;
    }
    const std::size_t n = RegularTreeNodeCount(2, h);
    std::vector<int> cuts = plan.cut_layers;
    if (cuts.empty()) {
      for (int c = std::max(0, h - 4); c <= h; ++c) cuts.push_back(c);
    }
    std::vector<double> sizes = plan.sweep.count("s") ? plan.sweep.at("s")
                                                      : std::vector<double>{static_cast<double>(o.s.value_or(5))};
    for (int c : cuts) {
      if (c < 0 || c > h) {
        add(CutMessage(c, h));
        continue;
      }
      const std::size_t black = BlackNodeCount(2, c);
      for (double s : sizes) {
        const std::uint64_t budget =
            o.total_budget.value_or(static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(s));
        if (budget < black) add(BowMessage(budget, black));
      }
    }
  }
  std::sort(diags.begin(), diags.end());
  diags.erase(std::unique(diags.begin(), diags.end()), diags.end());
  return diags;
}

int WorkersFromEnvironment() {
  const char* env = std::getenv("CACHENET_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("CACHENET_WORKERS must be a positive integer");
  return static_cast<int>(std::min<long>(v, 256));
}

std::string CsvTable::Body() const {
  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

std::string CsvTable::Text() const { return comment + "\n" + Body(); }

namespace {

CsvTable RunSlopes(const ExperimentPlan& plan) {
  CsvTable table;
  table.header = kSlopeCsvHeader;
  const std::uint32_t s = plan.s;
  const std::uint32_t d_min = 1u << plan.log2_d_min;
  const std::uint32_t d_max = 1u << plan.log2_d_max;
  const std::size_t count = plan.content_count.value_or(8ull * s * d_max);
  const PolicyKind policies[] = {PolicyKind::kURP, PolicyKind::kPPP, PolicyKind::kTPP,
                                 PolicyKind::kTPPC, PolicyKind::kLBND};
  for (double alpha : plan.alphas) {
    const Catalog cat(count, alpha);
    for (PolicyKind policy : policies) {
      DelayCurve curve;
      std::string order;
      for (int k = plan.log2_d_min; k <= plan.log2_d_max; ++k) {
        const std::uint32_t d = 1u << k;
        const auto r = PolicyBound(cat, policy, s, d, static_cast<double>(d));
        curve.points.emplace_back(static_cast<double>(d), r.value);
        order = r.order_expr;
      }
      const auto fit = FitScalingExponent(curve);
      table.rows.push_back(JoinCsv({PolicyName(policy), RegimeName(RegimeOf(alpha)),
                                    FormatNumber(alpha), std::to_string(count), std::to_string(s),
                                    std::to_string(d_min), std::to_string(d_max),
                                    FormatNumber(fit.slope, 6), FormatNumber(fit.intercept, 6),
                                    FormatNumber(fit.r_squared, 6),
                                    std::to_string(fit.points_used), order}));
    }
  }
  return table;
}

CsvTable RunBowSweep(const ExperimentPlan& plan) {
  CsvTable table;
  table.header = kBowCsvHeader;
  const Topology tree = BuildRegularTree(2, plan.tree_h);
  const std::uint64_t budget = plan.total_budget.value_or(tree.node_count());
  const std::size_t count = plan.content_count.value_or(3000);
  for (double alpha : plan.alphas) {
    const Catalog cat(count, alpha);
    const auto sweep = SweepBow(cat, tree, budget);
    for (const auto& p : sweep.points) {
      table.rows.push_back(JoinCsv({FormatNumber(alpha), std::to_string(count), "2",
                                    std::to_string(plan.tree_h), std::to_string(budget),
                                    std::to_string(p.m), std::to_string(p.cut_layer),
                                    std::to_string(p.per_node_budget),
                                    FormatNumber(p.delta_black), FormatNumber(p.value),
                                    p.m == sweep.best.m ? "1" : "0"}));
    }
  }
  return table;
}

struct Job {
  std::size_t point = 0;
  std::size_t policy = 0;
  std::optional<int> cut;
  std::uint64_t seed = 0;
};

CsvTable RunSimulation(const ExperimentPlan& plan, const RunOptions& options) {
  CsvTable table;
  table.header = kSimCsvHeader;

  // One topology for the whole plan.
  ScenarioOverrides shared = plan.base;
  if (plan.scenario == "I") {
    shared.topology = std::make_shared<const Topology>(BuildLine(200));
  } else if (plan.scenario == "II") {
    shared.topology = std::make_shared<const Topology>(LoadGraphml(*plan.base.topology_file));
  } else {
    shared.topology =
        std::make_shared<const Topology>(BuildRegularTree(2, plan.base.tree_h.value_or(15)));
  }
  const auto points = ExpandSweep(plan.sweep);
  std::vector<Scenario> scenarios;
  for (const auto& point : points) {
    auto o = Apply(shared, point);
    o.seed_count = 1;
    scenarios.push_back(MakeScenario(plan.scenario, o));
  }
  std::vector<PolicyChoice> policies;
  for (const auto& name : plan.policies) policies.push_back(ParsePolicyChoice(name));

  std::vector<Job> jobs;
  for (std::size_t pt = 0; pt < points.size(); ++pt) {
    std::vector<std::optional<int>> cuts = {std::nullopt};
    if (plan.scenario == "III") {
      cuts.clear();
      const auto& layers =
          plan.cut_layers.empty() ? scenarios[pt].default_cut_layers : plan.cut_layers;
      for (int c : layers) cuts.emplace_back(c);
    }
    for (std::size_t pol = 0; pol < policies.size(); ++pol) {
      for (const auto& cut : cuts) {
        for (std::uint64_t seed : plan.seeds) jobs.push_back({pt, pol, cut, seed});
      }
    }
  }

  std::vector<std::string> rows(jobs.size());
  ParallelFor(jobs.size(), options.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Scenario& sc = scenarios[job.point];
    const auto& policy = policies[job.policy];
    const SimConfig cfg = MakeSimConfig(sc, policy, job.seed, job.cut);
    const SimResult r = Run(cfg);
    const bool dynamic = std::holds_alternative<DynamicPolicy>(policy);
    double d_bar = sc.d_bar;
    if (job.cut && !dynamic) d_bar = std::max(1, *job.cut);
    rows[i] = JoinCsv({PolicyChoiceName(policy), FormatNumber(sc.catalog->alpha()),
                       std::to_string(sc.catalog->size()), std::to_string(sc.s), "",
                       FormatNumber(d_bar), FormatNumber(r.mean_delay), "simulated",
                       std::to_string(job.seed), std::to_string(cfg.slots), dynamic ? "1" : "0",
                       sc.name, KindName(sc.topology->kind()),
                       job.cut ? std::to_string(*job.cut) : "",
                       std::to_string(cfg.cache_config->total_budget),
                       std::to_string(cfg.warmup_slots), FormatNumber(cfg.arrival_prob),
                       InsertOnName(cfg.insert_on), RoundingName(sc.rounding),
                       FormatNumber(r.ci95_halfwidth), std::to_string(r.request_count)});
  });
  table.rows = std::move(rows);  // job order: (sweep point, policy, cut layer, seed)
  return table;
}

}  // namespace

CsvTable ExecutePlan(const ExperimentPlan& plan, const RunOptions& options) {
  const auto diags = ValidatePlan(plan);
  if (!diags.empty()) {
    std::string msg = "plan '" + plan.id + "' is not runnable:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw ConfigError(msg);
  }
  CsvTable table;
  if (plan.analysis == "table1-slopes") table = RunSlopes(plan);
  else if (plan.analysis == "bow-sweep") table = RunBowSweep(plan);
  else table = RunSimulation(plan, options);
  table.comment = "# plan=" + plan.id + " generated=" +
                  (options.timestamp.empty() ? UtcTimestamp() : options.timestamp);
  return table;
}

CsvTable RunPlan(const ExperimentPlan& plan, const RunOptions& options) {
  CsvTable table = ExecutePlan(plan, options);
  const fs::path out(plan.output_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw ConfigError("cannot write output '" + plan.output_path + "'");
  file << table.Text();
  if (!file) throw ConfigError("failed writing output '" + plan.output_path + "'");
  if (options.write_manifest) {
    nlohmann::json m;
    m["id"] = plan.id;
    m["plan_file"] = plan.source_path;
    m["output"] = plan.output_path;
    m["rows"] = table.rows.size();
    m["seeds"] = plan.seeds;
    if (plan.is_analysis()) {
      m["analysis"] = plan.analysis;
      m["alphas"] = plan.alphas;
      m["s"] = plan.s;
      m["log2_d_range"] = {plan.log2_d_min, plan.log2_d_max};
      m["tree_h"] = plan.tree_h;
      if (plan.content_count) m["content_count"] = *plan.content_count;
      if (plan.total_budget) m["total_budget"] = *plan.total_budget;
    } else {
      m["scenario"] = plan.scenario;
      m["policies"] = plan.policies;
      m["sweep"] = plan.sweep;
      const auto& o = plan.base;
      if (o.alpha) m["alpha"] = *o.alpha;
      if (o.topology_file) m["topology_file"] = *o.topology_file;
      if (o.tree_h) m["tree_h"] = *o.tree_h;
      if (o.content_count) m["content_count"] = *o.content_count;
      if (o.s) m["s"] = *o.s;
      if (o.total_budget) m["total_budget"] = *o.total_budget;
      if (o.slots) m["slots"] = *o.slots;
      if (o.warmup_fraction) m["warmup_fraction"] = *o.warmup_fraction;
      if (o.arrival_prob) m["arrival_prob"] = *o.arrival_prob;
      if (o.insert_on) m["insert_on"] = InsertOnName(*o.insert_on);
      if (o.rounding) m["cut_rounding"] = RoundingName(*o.rounding);
    }
    std::ofstream mf(out.string() + ".manifest.json", std::ios::trunc);
    mf << m.dump(2) << "\n";
  }
  return table;
}

}  // namespace cachenet
