#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cachenet/catalog.h"
#include "cachenet/topology.h"

namespace cachenet {

struct HomogeneousSizing {
  std::uint32_t s = 0;
};

// Black-or-white sizing on a regular tree: layers 0..cut_layer are black and
// share the budget, deeper layers are white (no cache).
struct BowSizing {
  int cut_layer = 0;
  int m = 0;                              // tree height minus cut_layer
  std::size_t black_nodes = 0;
  std::uint32_t black_budget_per_node = 0;  // floor(B / black_nodes)
};

using Sizing = std::variant<HomogeneousSizing, BowSizing>;

struct CacheConfig {
  std::vector<std::uint32_t> budgets;  // b_v per node
  std::uint64_t total_budget = 0;      // B
  Sizing sizing;
};

CacheConfig HomogeneousConfig(std::size_t node_count, std::uint32_t s);

// Splits B evenly over the black nodes (layers 0..cut_layer); the remainder
// goes one unit each to the lowest node ids. Throws ConfigError when the tree
// is not a regular tree, cut_layer is outside [0, h], or B is smaller than the
// number of black nodes.
CacheConfig BowConfig(const Topology& tree, int cut_layer, std::uint64_t total_budget);

// Number of nodes in layers 0..cut_layer of an (r+1)-regular tree.
std::size_t BlackNodeCount(int r, int cut_layer);

// How the b_v slots of a cache are filled from q.
enum class DrawModel {
  kPolicyDefault,  // kWithoutReplacement for URP, kIidCollapse otherwise
  kIidCollapse,    // b_v i.i.d. draws from q, duplicates collapse
  kWithoutReplacement,  // min(b_v, support) distinct contents, successive draws
                        // from q renormalized over the remaining contents
};

struct PlacementRealization {
  std::uint64_t seed = 0;
  PolicyKind policy = PolicyKind::kURP;
  DrawModel draw_model = DrawModel::kIidCollapse;
  std::vector<std::vector<ContentId>> per_node;  // sorted, distinct

  bool holds(NodeId v, ContentId c) const;
  std::string ToJson() const;
  static PlacementRealization FromJson(const std::string& json);
};

// Fills every node independently; node v uses the substream (seed, v).
PlacementRealization Realize(const PlacementDistribution& dist, const CacheConfig& cfg,
                             std::uint64_t seed,
                             DrawModel model = DrawModel::kPolicyDefault);

// Per-content probability that a cache with budget b holds the content under
// the i.i.d.-draw model: 1 - (1 - q_i)^b.
std::vector<double> HitProbability(const PlacementDistribution& dist, std::uint32_t b);

// Exact URP hit probability for b distinct uniform draws: min(b, |C|) / |C|.
double UrpExactHitProbability(std::size_t content_count, std::uint32_t b);

// Delay of the popularity-ordered placement along a path of length d:
// sum_i p_i * min(ceil(i / s), d).
double LbndDelayGivenDistance(const Catalog& cat, std::uint32_t s, std::uint32_t d);

}  // namespace cachenet
