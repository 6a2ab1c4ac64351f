#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cachenet/catalog.h"
#include "cachenet/placement.h"
#include "cachenet/topology.h"

namespace cachenet {

enum class DynamicPolicy { kLRU, kLFU, kRandom };
std::string DynamicPolicyName(DynamicPolicy policy);

// Where a dynamic cache inserts delivered content: at every cache the request
// missed on its way (kDelivery) or only at the requester's cache (kFirstHop).
enum class InsertOn { kDelivery, kFirstHop };

enum class CacheEvent { kHit, kMissPassThrough, kDelivered };

// Least-recently-used replacement. Recency is an intrusive doubly linked list
// over dense per-content arrays.
class LruCache {
 public:
  LruCache(std::uint32_t capacity, std::size_t content_count);
  bool contains(ContentId c) const { return c < prev_.size() && prev_[c] != kAbsent; }
  std::size_t size() const { return size_; }
  std::uint32_t capacity() const { return capacity_; }
  void step(ContentId c, CacheEvent event);
  // Residents from least to most recently used.
  std::vector<ContentId> residents() const;

 private:
  static constexpr ContentId kAbsent = 0xffffffffu;
  static constexpr ContentId kNil = 0xfffffffeu;
  void unlink(ContentId c);
  void push_back(ContentId c);
  std::uint32_t capacity_;
  std::size_t size_ = 0;
  std::vector<ContentId> prev_, next_;
  ContentId head_ = kNil, tail_ = kNil;  // head = least recent
};

// Least-frequently-used replacement with per-node request counters. A
// delivered content replaces the weakest resident only if its counter is
// higher, ties going to the lower content id.
class LfuCache {
 public:
  LfuCache(std::uint32_t capacity, std::size_t content_count)
      : capacity_(capacity), count_(content_count, 0), resident_(content_count, 0) {}
  bool contains(ContentId c) const { return resident_[c] != 0; }
  std::size_t size() const { return ranked_.size(); }
  std::uint32_t capacity() const { return capacity_; }
  std::uint32_t count(ContentId c) const { return count_[c]; }
  void step(ContentId c, CacheEvent event);
  std::vector<ContentId> residents() const;

 private:
  struct Weaker {
    bool operator()(const std::pair<std::uint32_t, ContentId>& a,
                    const std::pair<std::uint32_t, ContentId>& b) const {
      return a.first != b.first ? a.first < b.first : a.second > b.second;
    }
  };
  std::uint32_t capacity_;
  std::vector<std::uint32_t> count_;
  std::vector<char> resident_;
  std::set<std::pair<std::uint32_t, ContentId>, Weaker> ranked_;  // begin = weakest
};

// Random replacement: a delivered content evicts a uniformly chosen resident.
class RandomCache {
 public:
  RandomCache(std::uint32_t capacity, std::size_t content_count)
      : capacity_(capacity), slot_(capacity > 0 ? content_count : 0, kAbsent) {}
  bool contains(ContentId c) const { return c < slot_.size() && slot_[c] != kAbsent; }
  std::size_t size() const { return items_.size(); }
  std::uint32_t capacity() const { return capacity_; }
  void step(ContentId c, CacheEvent event, Rng& rng);
  std::vector<ContentId> residents() const { return items_; }

 private:
  static constexpr std::uint32_t kAbsent = 0xffffffffu;
  std::uint32_t capacity_;
  std::vector<ContentId> items_;
  std::vector<std::uint32_t> slot_;
};

using CacheState = std::variant<LruCache, LfuCache, RandomCache>;

CacheState MakeCacheState(DynamicPolicy policy, std::uint32_t capacity,
                          std::size_t content_count);
bool Contains(const CacheState& state, ContentId c);
std::size_t Occupancy(const CacheState& state);
void ReplacementStep(CacheState& state, ContentId c, CacheEvent event, Rng& rng);

enum class ServerPlacement { kUniformRandom, kRoot };
enum class RequesterSet { kAllNodes, kLeaves };

struct SimConfig {
  std::shared_ptr<const Topology> topology;
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const CacheConfig> cache_config;
  std::variant<PlacementRealization, DynamicPolicy> policy;
  double arrival_prob = 0.5;
  std::uint64_t slots = 100000;
  std::uint64_t warmup_slots = 10000;
  std::uint64_t seed = 1;
  ServerPlacement servers = ServerPlacement::kUniformRandom;
  RequesterSet requesters = RequesterSet::kAllNodes;
  InsertOn insert_on = InsertOn::kDelivery;
  // Re-checks |C_v| <= b_v after every insertion.
  bool check_budgets = false;
};

// Throws ConfigError on inconsistent configuration.
void Validate(const SimConfig& cfg);

struct SimResult {
  double mean_delay = 0.0;
  double ci95_halfwidth = 0.0;  // batch means over the measured slots
  std::uint64_t request_count = 0;
  std::map<std::uint32_t, double> per_distance_mean;
  std::map<std::uint32_t, std::uint64_t> per_distance_count;
  std::map<int, double> hit_rate_per_layer;  // fraction of requests served per layer
  double server_fraction = 0.0;              // fraction of requests reaching the server
  std::uint64_t seed = 0;
};

// Requests arrive at each requester node with probability arrival_prob per
// slot; each walks its shortest path checking the d-1 caches before the
// server's node in order and pays the index of the first hit, or d.
SimResult Run(const SimConfig& cfg);

struct Aggregate {
  double mean = 0.0;
  double ci95_halfwidth = 0.0;  // Student t over per-seed means
  std::vector<double> per_seed;
};
Aggregate Summarize(std::span<const SimResult> runs);
double StudentT975(std::size_t dof);

// Runs one configuration per seed on up to `workers` threads; results are in
// seed order regardless of scheduling.
std::vector<SimResult> RunSeeds(const std::function<SimConfig(std::uint64_t)>& make,
                                std::span<const std::uint64_t> seeds, int workers = 1);

// Either a static placement policy (realized per seed) or a dynamic one.
using PolicyChoice = std::variant<PolicyKind, DynamicPolicy>;
std::string PolicyChoiceName(const PolicyChoice& choice);
PolicyChoice ParsePolicyChoice(const std::string& name);

struct ScenarioOverrides {
  std::optional<double> alpha;
  std::optional<std::string> topology_file;
  std::shared_ptr<const Topology> topology;  // replaces the scenario topology
  std::optional<int> tree_h;
  std::optional<std::size_t> content_count;
  std::optional<std::uint32_t> s;
  std::optional<std::uint64_t> total_budget;  // tree scenarios only
  std::optional<std::uint64_t> slots;
  std::optional<double> warmup_fraction;
  std::optional<double> arrival_prob;
  std::optional<int> seed_count;
  std::optional<InsertOn> insert_on;
  std::optional<CutRounding> rounding;
};

// One simulation setting: topology, catalog, budgets, traffic model.
struct Scenario {
  std::string name;
  std::shared_ptr<const Topology> topology;
  std::shared_ptr<const Catalog> catalog;
  std::uint32_t s = 0;               // homogeneous per-node size
  std::uint64_t total_budget = 0;    // B
  double d_bar = 0.0;                // measured average routing distance
  ServerPlacement servers = ServerPlacement::kUniformRandom;
  RequesterSet requesters = RequesterSet::kAllNodes;
  std::uint64_t slots = 100000;
  std::optional<double> warmup_fraction;  // default: 0.1 static, 0.3 dynamic
  double arrival_prob = 0.5;
  std::vector<std::uint64_t> seeds;
  InsertOn insert_on = InsertOn::kDelivery;
  CutRounding rounding = CutRounding::kCeil;  // TPP-C cut index
  std::vector<int> default_cut_layers;  // tree scenarios
};

// "I" (line, n=200, |C|=400, s=50), "II" (GraphML topology, |C|=3000, s=5),
// "III" (regular tree r=2 h=15, |C|=3000, s=5, leaf requesters, root server).
Scenario MakeScenario(const std::string& name, const ScenarioOverrides& overrides);

// Builds the configuration for one (policy, cut layer, seed) point. cut_layer
// applies to tree scenarios: the budget B is split over layers 0..cut_layer
// and TPP-C uses d_bar = cut_layer. Static placements are realized from the
// seed.
SimConfig MakeSimConfig(const Scenario& scenario, const PolicyChoice& policy,
                        std::uint64_t seed, std::optional<int> cut_layer = std::nullopt);

// The placement distribution a static policy uses in this scenario.
PlacementDistribution ScenarioDistribution(const Scenario& scenario, PolicyKind policy,
                                           const CacheConfig& cfg,
                                           std::optional<int> cut_layer);

}  // namespace cachenet
