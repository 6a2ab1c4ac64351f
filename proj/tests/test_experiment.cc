#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cachenet/errors.h"
#include "cachenet/experiment.h"

namespace cachenet {
namespace {

namespace fs = std::filesystem;

std::string PlanPath(const std::string& name) {
  return std::string(CACHENET_SOURCE_DIR) + "/plans/" + name;
}

// Fields in a CSV line; commas inside double quotes do not separate.
std::size_t Columns(const std::string& line) {
  std::size_t fields = 1;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) ++fields;
  }
  return fields;
}

bool HasDiagnostic(const std::vector<std::string>& diags, const std::string& needle) {
  return std::any_of(diags.begin(), diags.end(),
                     [&](const std::string& d) { return d.find(needle) != std::string::npos; });
}

RunOptions Quiet(int workers = 1) {
  RunOptions o;
  o.workers = workers;
  o.write_manifest = false;
  o.timestamp = "2000-01-01T00:00:00Z";
  return o;
}

TEST(Plan, ShippedPlansValidate) {
  for (const char* name : {"fig4.yaml", "fig5.yaml", "fig6.yaml", "table1.yaml", "bow.yaml"}) {
    EXPECT_EQ(ValidatePlan(LoadPlan(PlanPath(name))), std::vector<std::string>{}) << name;
  }
}

TEST(Plan, ParsesFields) {
  const auto plan = LoadPlan(PlanPath("fig4.yaml"));
  EXPECT_EQ(plan.id, "fig4");
  EXPECT_EQ(plan.scenario, "I");
  EXPECT_EQ(plan.policies.size(), 6u);
  EXPECT_EQ(plan.seeds.size(), 10u);
  EXPECT_EQ(plan.sweep.at("alpha").size(), 15u);
  EXPECT_FALSE(plan.is_analysis());
  EXPECT_TRUE(LoadPlan(PlanPath("table1.yaml")).is_analysis());
}

TEST(Plan, CutLayerBeyondHeight) {
  const auto plan = ParsePlan(
      "id: t\nscenario: III\noutput: out/t.csv\npolicies: [TPPC]\n"
      "sweep:\n  cut_layer: [14, 16]\n");
  EXPECT_TRUE(HasDiagnostic(ValidatePlan(plan), "cut layer exceeds tree height"));
}

TEST(Plan, BudgetBelowBlackNodes) {
  const auto plan = ParsePlan(
      "id: t\nscenario: III\ntree_h: 6\ntotal_budget: 20\noutput: out/t.csv\n"
      "policies: [TPPC]\nsweep:\n  cut_layer: [2, 4]\n");
  const auto diags = ValidatePlan(plan);
  EXPECT_TRUE(HasDiagnostic(diags, "at least one cache slot per black node"));
}

TEST(Plan, OtherDiagnostics) {
  const auto missing = ParsePlan(
      "id: t\nscenario: II\ntopology_file: /nonexistent.graphml\noutput: o.csv\npolicies: [PPP]\n");
  EXPECT_FALSE(ValidatePlan(missing).empty());
  const auto lbnd = ParsePlan("id: t\nscenario: I\noutput: o.csv\npolicies: [LBND]\n");
  EXPECT_FALSE(ValidatePlan(lbnd).empty());
  const auto prob = ParsePlan(
      "id: t\nscenario: I\noutput: o.csv\npolicies: [PPP]\nsweep:\n  arrival_prob: [0.5, 1.5]\n");
  EXPECT_FALSE(ValidatePlan(prob).empty());
}

TEST(Plan, RejectsUnknownKeys) {
  EXPECT_THROW(ParsePlan("id: t\nscenario: I\ncolour: blue\n"), ConfigError);
  EXPECT_THROW(ParsePlan("id: t\nscenario: I\nsweep:\n  temperature: [1]\n"), ConfigError);
  EXPECT_THROW(ParsePlan("id: t\nscenario: I\nseeds: [1]\nseed_count: 3\n"), ConfigError);
  EXPECT_THROW(ParsePlan("id: [unclosed\n"), ConfigError);
  EXPECT_THROW(LoadPlan("/nonexistent/plan.yaml"), ConfigError);
}

TEST(Execute, EmptySweepIsOneRowPerSeed) {
  const auto plan = ParsePlan(
      "id: t\nscenario: I\noutput: o.csv\npolicies: [PPP]\nslots: 200\n");
  const auto table = ExecutePlan(plan, Quiet());
  EXPECT_EQ(table.header, kSimCsvHeader);
  EXPECT_EQ(table.rows.size(), 10u);
  for (const auto& row : table.rows) EXPECT_EQ(Columns(row), Columns(kSimCsvHeader));
}

TEST(Execute, RowCountCoversEveryPoint) {
  const auto plan = ParsePlan(
      "id: t\nscenario: I\noutput: o.csv\npolicies: [URP, TPPC, LRU]\nslots: 100\n"
      "seeds: [4, 5]\nsweep:\n  alpha: [0.5, 1.5]\n");
  const auto table = ExecutePlan(plan, Quiet());
  EXPECT_EQ(table.rows.size(), 2u * 3u * 2u);
}

TEST(Execute, TreeSweepOverCutLayers) {
  const auto plan = ParsePlan(
      "id: t\nscenario: III\ntree_h: 5\ntotal_budget: 200\ncontent_count: 100\n"
      "output: o.csv\npolicies: [TPPC]\nslots: 100\nseed_count: 2\n"
      "sweep:\n  cut_layer: [3, 5]\n");
  const auto table = ExecutePlan(plan, Quiet());
  EXPECT_EQ(table.rows.size(), 4u);
}

TEST(Execute, BodiesAreReproducible) {
  const auto plan = ParsePlan(
      "id: t\nscenario: I\noutput: o.csv\npolicies: [TPP, LFU]\nslots: 150\n"
      "seed_count: 3\nsweep:\n  alpha: [0.8, 2.0]\n");
  const auto a = ExecutePlan(plan, Quiet(1));
  const auto b = ExecutePlan(plan, Quiet(3));
  EXPECT_EQ(a.Body(), b.Body());
  auto other = Quiet(1);
  other.timestamp = "2001-01-01T00:00:00Z";
  const auto c = ExecutePlan(plan, other);
  EXPECT_EQ(a.Body(), c.Body());
  EXPECT_NE(a.Text(), c.Text());
}

TEST(Execute, InvalidPlanThrows) {
  const auto plan = ParsePlan("id: t\nscenario: I\noutput: o.csv\npolicies: [LBND]\n");
  EXPECT_THROW(ExecutePlan(plan, Quiet()), ConfigError);
}

TEST(Execute, SlopeTable) {
  const auto table = ExecutePlan(LoadPlan(PlanPath("table1.yaml")), Quiet());
  EXPECT_EQ(table.header, kSlopeCsvHeader);
  // Five policies per alpha.
  EXPECT_EQ(table.rows.size(), 8u * 5u);
  for (const auto& row : table.rows) EXPECT_EQ(Columns(row), Columns(kSlopeCsvHeader));
}

TEST(Execute, BowTableMarksOneBestPerAlpha) {
  const auto table = ExecutePlan(LoadPlan(PlanPath("bow.yaml")), Quiet());
  EXPECT_EQ(table.header, kBowCsvHeader);
  std::size_t best = 0;
  for (const auto& row : table.rows) best += row.substr(row.rfind(',') + 1) == "1";
  EXPECT_EQ(best, 5u);
}

TEST(RunPlanTest, WritesCsvAndManifest) {
  const fs::path dir = fs::temp_directory_path() / "cachenet_test_runplan";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto plan = ParsePlan("id: t\nscenario: I\noutput: o.csv\npolicies: [PPP]\nslots: 100\n"
                        "seed_count: 2\n");
  plan.output_path = (dir / "sub" / "t.csv").string();
  RunOptions options = Quiet();
  options.write_manifest = true;
  const auto table = RunPlan(plan, options);
  std::ifstream in(plan.output_path);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), table.Text());
  EXPECT_EQ(text.str().rfind("# plan=t", 0), 0u);
  EXPECT_TRUE(fs::exists(plan.output_path + ".manifest.json"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cachenet
