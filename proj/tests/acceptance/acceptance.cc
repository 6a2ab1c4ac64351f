// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `acceptance --only 2,5` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cachenet/analysis.h"
#include "cachenet/experiment.h"
#include "cachenet/random.h"
#include "cachenet/simulate.h"

namespace {

using namespace cachenet;
using Clock = std::chrono::steady_clock;

int g_workers = 1;

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;  // detail, printed indented

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
  }
  void note(const std::string& what) { lines.push_back("      " + what); }
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Aggregate Simulate(const Scenario& sc, const PolicyChoice& policy,
                   std::optional<int> cut_layer = std::nullopt) {
  const std::function<SimConfig(std::uint64_t)> make = [&](std::uint64_t seed) {
    return MakeSimConfig(sc, policy, seed, cut_layer);
  };
  return Summarize(RunSeeds(make, sc.seeds, g_workers));
}

double AverageOver(const Topology& t, const std::function<double(std::uint32_t)>& delta) {
  return AverageDelay(ComputeDistanceModel(t, ExactAllPairs{}), delta);
}

// 1. Simulated URP against the closed form on small random networks.
Outcome UrpExactness() {
  Outcome out;
  Rng rng(20240601);
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + UniformIndex(rng, 46);
    const std::size_t content = 2 + UniformIndex(rng, 99);
    const auto s = static_cast<std::uint32_t>(
        1 + UniformIndex(rng, std::min<std::size_t>(10, content)));
    const double alpha = 0.2 + 2.6 * UniformUnit(rng);
    auto topo = std::make_shared<const Topology>(
        trial % 2 == 0 ? BuildLine(n) : BuildErdosRenyi(n, 3.0 / n, 100 + trial));
    auto cat = std::make_shared<const Catalog>(content, alpha);
    auto caches = std::make_shared<const CacheConfig>(HomogeneousConfig(topo->node_count(), s));
    const auto dist = MakePlacementDistribution(*cat, {PolicyKind::kURP});
    const std::function<SimConfig(std::uint64_t)> make = [&](std::uint64_t seed) {
      SimConfig cfg;
      cfg.topology = topo;
      cfg.catalog = cat;
      cfg.cache_config = caches;
      cfg.policy = Realize(dist, *caches, SubstreamSeed(seed, 0x91a));
      cfg.slots = 10000;
      cfg.warmup_slots = 1000;
      cfg.seed = seed;
      return cfg;
    };
    const auto agg = Summarize(RunSeeds(make, seeds, g_workers));
    const double exact =
        AverageOver(*topo, [&](std::uint32_t d) { return UrpDelay(content, s, d); });
    out.check(std::abs(agg.mean - exact) <= 3.0 * agg.ci95_halfwidth,
              Fmt("n=%zu |C|=%zu s=%u alpha=%.2f: sim %.4f +- %.4f, closed form %.4f",
                  topo->node_count(), content, s, alpha, agg.mean, agg.ci95_halfwidth, exact));
  }
  return out;
}

// 2. Closed form of the per-content delay against the explicit sum.
Outcome XiOracle() {
  Outcome out;
  double worst = 0.0;
  for (int k = 1; k <= 99; ++k) {
    const double h = k / 100.0;
    for (std::uint32_t d = 1; d <= 50; ++d) {
      double sum = 0.0;
      for (std::uint32_t l = 1; l + 1 <= d; ++l) sum += l * h * std::pow(1.0 - h, l - 1);
      sum += d * std::pow(1.0 - h, d - 1);
      worst = std::max(worst, std::abs(XiDelay(h, d) - sum));
    }
  }
  out.check(worst <= 1e-9, Fmt("max |closed - explicit| = %.3e over 99 x 50 grid", worst));
  return out;
}

// Scenario I runs shared by criteria 3 and 7.
class LineRuns {
 public:
  const Aggregate& get(double alpha, const std::string& policy) {
    const auto key = std::make_pair(alpha, policy);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ScenarioOverrides o;
    o.alpha = alpha;
    o.slots = kSlots;
    o.seed_count = kSeeds;
    const auto sc = MakeScenario("I", o);
    return cache_.emplace(key, Simulate(sc, ParsePolicyChoice(policy))).first->second;
  }
  static constexpr std::uint64_t kSlots = 4000;
  static constexpr int kSeeds = 10;

 private:
  std::map<std::pair<double, std::string>, Aggregate> cache_;
};

LineRuns g_line;

// 3. No policy beats the lower bound on the line scenario.
Outcome LbndDominance() {
  Outcome out;
  const auto sc = MakeScenario("I", {});
  out.note(Fmt("line n=%zu |C|=%zu s=%u, %d seeds x %llu slots", sc.topology->node_count(),
               sc.catalog->size(), sc.s, LineRuns::kSeeds,
               static_cast<unsigned long long>(LineRuns::kSlots)));
  for (double alpha : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    const Catalog cat(sc.catalog->size(), alpha);
    const double lbnd = AverageOver(
        *sc.topology, [&](std::uint32_t d) { return LbndDelayGivenDistance(cat, sc.s, d); });
    for (const char* policy : {"URP", "PPP", "TPP", "TPPC", "LRU", "LFU"}) {
      const auto& agg = g_line.get(alpha, policy);
      out.check(agg.mean >= lbnd - 3.0 * agg.ci95_halfwidth,
                Fmt("alpha=%.1f %-4s %.4f +- %.4f >= LBND %.4f", alpha, policy, agg.mean,
                    agg.ci95_halfwidth, lbnd));
    }
  }
  return out;
}

// 4. The tilt beta = alpha/2 minimizes sum p_i / q_i(beta).
Outcome TiltOptimality() {
  Outcome out;
  for (std::size_t n : {2u, 10u, 37u, 100u}) {
    for (double alpha = 0.5; alpha <= 3.0 + 1e-9; alpha += 0.5) {
      const Catalog cat(n, alpha);
      const double step = 0.05 * alpha;
      double best = std::numeric_limits<double>::infinity(), best_beta = 0.0, floor = 0.0;
      for (int k = 0; k <= 40; ++k) {
        const double beta = k * step;
        const auto cs = CauchySchwarzBound(cat, TiltedDistribution(n, beta, n).q);
        floor = cs.floor;
        if (cs.value < best) {
          best = cs.value;
          best_beta = beta;
        }
      }
      const bool ok = std::abs(best_beta - alpha / 2.0) <= step + 1e-12 &&
                      std::abs(best - floor) <= 1e-6 * floor;
      out.check(ok, Fmt("|C|=%zu alpha=%.1f: argmin beta=%.3f, min %.9g, floor %.9g", n, alpha,
                        best_beta, best, floor));
    }
  }
  return out;
}

DelayCurve DistanceCurve(const std::function<double(std::uint32_t)>& delay, int lo, int hi) {
  DelayCurve c{CurveAxis::kDistance, {}};
  for (int k = lo; k <= hi; ++k) {
    const auto d = static_cast<std::uint32_t>(1u << k);
    c.points.emplace_back(d, delay(d));
  }
  return c;
}

// 5. LBND slope 2 - alpha in the distance-limited regime.
Outcome LbndExponent() {
  Outcome out;
  const std::uint32_t s = 2;
  const std::size_t content = 8 * s * 4096;
  for (double alpha : {1.25, 1.5, 1.75}) {
    const Catalog cat(content, alpha);
    const auto fit = FitScalingExponent(DistanceCurve(
        [&](std::uint32_t d) { return PolicyBound(cat, PolicyKind::kLBND, s, d).value; }, 4,
        12));
    out.check(std::abs(fit.slope - (2.0 - alpha)) <= 0.1,
              Fmt("alpha=%.2f |C|=%zu: slope %.4f (target %.2f, r2 %.4f)", alpha, content,
                  fit.slope, 2.0 - alpha, fit.r_squared));
  }
  return out;
}

// 6. URP slope 1 when s d << |C|, slope 0 when s d >> |C|.
Outcome UrpRegimeSwitch() {
  Outcome out;
  {
    const std::uint32_t s = 2;
    const std::size_t content = 8 * s * 4096;
    const auto fit = FitScalingExponent(
        DistanceCurve([&](std::uint32_t d) { return UrpDelay(content, s, d); }, 4, 12));
    out.check(std::abs(fit.slope - 1.0) <= 0.05,
              Fmt("s=%u |C|=%zu d=2^4..2^12: slope %.4f (target 1)", s, content, fit.slope));
  }
  {
    const std::uint32_t s = 10;
    const std::size_t content = 100;
    const auto fit = FitScalingExponent(
        DistanceCurve([&](std::uint32_t d) { return UrpDelay(content, s, d); }, 6, 12));
    out.check(std::abs(fit.slope) <= 0.05,
              Fmt("s=%u |C|=%zu d=2^6..2^12: slope %.4f (target 0)", s, content, fit.slope));
  }
  return out;
}

// 7. Tilted placements no worse than proportional on the line scenario.
Outcome LineOrdering() {
  Outcome out;
  for (double alpha : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    const auto& ppp = g_line.get(alpha, "PPP");
    for (const char* policy : {"TPP", "TPPC"}) {
      const auto& a = g_line.get(alpha, policy);
      const double ci = std::hypot(a.ci95_halfwidth, ppp.ci95_halfwidth);
      out.check(a.mean <= ppp.mean + ci, Fmt("alpha=%.1f %-4s %.4f <= PPP %.4f + %.4f", alpha,
                                             policy, a.mean, ppp.mean, ci));
    }
  }
  return out;
}

// 8. Static policies between LFU and LRU on a generated AS-sized graph.
Outcome AsSandwich() {
  Outcome out;
  auto topo = std::make_shared<const Topology>(BuildErdosRenyi(160, 2.5 / 159, 7));
  for (double alpha : {1.0, 1.5, 2.0}) {
    ScenarioOverrides o;
    o.alpha = alpha;
    o.topology = topo;
    o.slots = 3000;
    o.seed_count = 10;
    const auto sc = MakeScenario("II", o);
    if (alpha == 1.0) {
      out.note(Fmt("Erdos-Renyi n=%zu, d_bar=%.3f, |C|=%zu, s=%u, 10 seeds x 3000 slots",
                   sc.topology->node_count(), sc.d_bar, sc.catalog->size(), sc.s));
    }
    const auto lfu = Simulate(sc, DynamicPolicy::kLFU);
    const auto lru = Simulate(sc, DynamicPolicy::kLRU);
    for (auto policy : {PolicyKind::kPPP, PolicyKind::kTPPC}) {
      const auto a = Simulate(sc, policy);
      const double lo_ci = std::hypot(a.ci95_halfwidth, lfu.ci95_halfwidth);
      const double hi_ci = std::hypot(a.ci95_halfwidth, lru.ci95_halfwidth);
      out.check(lfu.mean - lo_ci <= a.mean && a.mean <= lru.mean + hi_ci,
                Fmt("alpha=%.1f LFU %.4f  %-4s %.4f +- %.4f  LRU %.4f", alpha, lfu.mean,
                    PolicyName(policy).c_str(), a.mean, a.ci95_halfwidth, lru.mean));
    }
  }
  return out;
}

struct TreeSweep {
  double alpha = 0.0;
  std::map<int, Aggregate> by_cut;
  int h = 0;
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const Topology> topology;
  std::uint64_t budget = 0;
};

std::vector<TreeSweep> g_tree;

const std::vector<TreeSweep>& TreeRuns() {
  if (!g_tree.empty()) return g_tree;
  for (double alpha : {1.0, 1.5, 2.0}) {
    ScenarioOverrides o;
    o.alpha = alpha;
    o.tree_h = 10;
    o.total_budget = RegularTreeNodeCount(2, 10);
    o.slots = 3000;
    o.seed_count = 10;
    const auto sc = MakeScenario("III", o);
    TreeSweep sweep{alpha, {}, 10, sc.catalog, sc.topology, sc.total_budget};
    for (int c = 6; c <= 10; ++c) sweep.by_cut[c] = Simulate(sc, PolicyKind::kTPPC, c);
    g_tree.push_back(std::move(sweep));
  }
  return g_tree;
}

// 9. Some cut layer beats homogeneous sizing for alpha < 2.
Outcome TreeGain() {
  Outcome out;
  out.note("tree r=2 h=10, B=n=3070, |C|=3000, TPP-C, 10 seeds x 3000 slots");
  for (const auto& sweep : TreeRuns()) {
    std::string row = Fmt("alpha=%.1f", sweep.alpha);
    for (const auto& [c, agg] : sweep.by_cut) row += Fmt("  c=%d %.3f", c, agg.mean);
    out.note(row);
    const auto& homo = sweep.by_cut.at(sweep.h);
    const auto best = std::min_element(sweep.by_cut.begin(), sweep.by_cut.end(),
                                       [](const auto& a, const auto& b) {
                                         return a.second.mean < b.second.mean;
                                       });
    const double ci = std::hypot(best->second.ci95_halfwidth, homo.ci95_halfwidth);
    const std::string line =
        Fmt("alpha=%.1f best c=%d %.4f vs homogeneous %.4f (ci %.4f)", sweep.alpha,
            best->first, best->second.mean, homo.mean, ci);
    if (sweep.alpha < 2.0) {
      out.check(best->second.mean < homo.mean - ci, line);
    } else {
      out.note(line + " (not required)");
    }
  }
  return out;
}

// 10. At the simulated optimum the white depth matches the black delay.
Outcome BowBalance() {
  Outcome out;
  for (const auto& sweep : TreeRuns()) {
    if (sweep.alpha >= 2.0) continue;
    const auto best = std::min_element(sweep.by_cut.begin(), sweep.by_cut.end(),
                                       [](const auto& a, const auto& b) {
                                         return a.second.mean < b.second.mean;
                                       });
    const int m = sweep.h - best->first;
    const auto pt = BowCompositeBound(*sweep.catalog, *sweep.topology, sweep.budget, m);
    const auto analytic = SweepBow(*sweep.catalog, *sweep.topology, sweep.budget);
    // Requests cross m empty white caches first, so the rest is spent in black.
    const double measured_black = best->second.mean - m;
    out.check(std::abs(m - pt.delta_black) <= std::max(2.0, 0.5 * m),
              Fmt("alpha=%.1f m*=%d delta_black=%.3f (measured black delay %.3f, bound "
                  "minimizer m=%d)",
                  sweep.alpha, m, pt.delta_black, measured_black, analytic.best.m));
  }
  return out;
}

// 11. Re-running a plan yields byte-identical CSV bodies.
Outcome Determinism() {
  Outcome out;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cachenet_acceptance";
  fs::create_directories(dir);
  const char* plans[] = {
      "id: det-line\nscenario: I\noutput: a.csv\npolicies: [URP, TPPC, LRU, LFU]\n"
      "slots: 300\nseed_count: 3\nsweep:\n  alpha: [0.8, 1.6]\n",
      "id: det-tree\nscenario: III\ntree_h: 6\ntotal_budget: 400\ncontent_count: 300\n"
      "output: a.csv\npolicies: [TPPC, LRU]\nslots: 200\nseed_count: 2\n"
      "sweep:\n  cut_layer: [4, 6]\n",
      "id: det-slopes\nanalysis: table1-slopes\noutput: a.csv\nalphas: [0.5, 1.5, 2.5]\n"};
  for (const char* text : plans) {
    auto plan = ParsePlan(text);
    std::string bodies[2];
    for (int run = 0; run < 2; ++run) {
      plan.output_path = (dir / (plan.id + "-" + std::to_string(run) + ".csv")).string();
      RunOptions options;
      options.workers = run == 0 ? 1 : 2;
      RunPlan(plan, options);
      std::ifstream in(plan.output_path);
      std::string first_line;
      std::getline(in, first_line);
      std::stringstream rest;
      rest << in.rdbuf();
      bodies[run] = rest.str();
    }
    out.check(!bodies[0].empty() && bodies[0] == bodies[1],
              Fmt("%s: %zu-byte body identical across runs", plan.id.c_str(), bodies[0].size()));
  }
  fs::remove_all(dir);
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "print per-check detail for passing criteria too");
  CLI11_PARSE(app, argc, argv);
  g_workers = WorkersFromEnvironment();

  const Criterion criteria[] = {
      {1, "URP simulation matches closed form", 120, UrpExactness},
      {2, "per-content delay closed form equals explicit sum", 1, XiOracle},
      {3, "LBND lower-bounds every policy (line)", 600, LbndDominance},
      {4, "beta = alpha/2 minimizes the Cauchy-Schwarz sum", 10, TiltOptimality},
      {5, "LBND exponent 2 - alpha", 30, LbndExponent},
      {6, "URP regime switch", 30, UrpRegimeSwitch},
      {7, "TPP and TPP-C no worse than PPP (line)", 900, LineOrdering},
      {8, "LFU <= PPP, TPP-C <= LRU (AS-sized graph)", 1800, AsSandwich},
      {9, "heterogeneous sizing beats homogeneous (tree)", 1800, TreeGain},
      {10, "BoW balance at the optimum", 1800, BowBalance},
      {11, "plan re-runs are byte-identical", 60, Determinism},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = outcome.pass && in_time;
    all = all && pass;
    std::printf("%s criterion %d: %s (%.1fs, budget %.0fs)\n", pass ? "PASS" : "FAIL", c.id,
                c.name, secs, c.budget_seconds);
    if (!pass || verbose) {
      for (const auto& line : outcome.lines) std::printf("    %s\n", line.c_str());
      if (!in_time) std::printf("    FAIL  over runtime budget\n");
    }
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
