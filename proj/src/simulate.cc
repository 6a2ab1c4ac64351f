#include "cachenet/simulate.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <mutex>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "cachenet/errors.h"

namespace cachenet {

std::string DynamicPolicyName(DynamicPolicy policy) {
  switch (policy) {
    case DynamicPolicy::kLRU: return "LRU";
    case DynamicPolicy::kLFU: return "LFU";
    case DynamicPolicy::kRandom: return "RANDOM";
  }
  return "?";
}

LruCache::LruCache(std::uint32_t capacity, std::size_t content_count)
    : capacity_(capacity),
      prev_(capacity > 0 ? content_count : 0, kAbsent),
      next_(capacity > 0 ? content_count : 0, kAbsent) {}

void LruCache::unlink(ContentId c) {
  const ContentId p = prev_[c], n = next_[c];
  (p == kNil ? head_ : next_[p]) = n;
  (n == kNil ? tail_ : prev_[n]) = p;
  prev_[c] = next_[c] = kAbsent;
  --size_;
}

void LruCache::push_back(ContentId c) {
  prev_[c] = tail_;
  next_[c] = kNil;
  (tail_ == kNil ? head_ : next_[tail_]) = c;
  tail_ = c;
  ++size_;
}

void LruCache::step(ContentId c, CacheEvent event) {
  if (capacity_ == 0 || event == CacheEvent::kMissPassThrough) return;
  if (contains(c)) {
    unlink(c);
    push_back(c);
    return;
  }
  if (event != CacheEvent::kDelivered) return;
  if (size_ >= capacity_) unlink(head_);
  push_back(c);
}

std::vector<ContentId> LruCache::residents() const {
  std::vector<ContentId> out;
  for (ContentId c = head_; c != kNil; c = next_[c]) out.push_back(c);
  return out;
}

void LfuCache::step(ContentId c, CacheEvent event) {
  if (capacity_ == 0) return;
  if (event == CacheEvent::kHit || event == CacheEvent::kMissPassThrough) {
    if (resident_[c]) ranked_.erase({count_[c], c});
    ++count_[c];
    if (resident_[c]) ranked_.insert({count_[c], c});
    return;
  }
  if (resident_[c]) return;
  if (ranked_.size() < capacity_) {
    ranked_.insert({count_[c], c});
    resident_[c] = 1;
    return;
  }
  const auto weakest = *ranked_.begin();
  if (Weaker{}(weakest, {count_[c], c})) {
    ranked_.erase(ranked_.begin());
    resident_[weakest.second] = 0;
    ranked_.insert({count_[c], c});
    resident_[c] = 1;
  }
}

std::vector<ContentId> LfuCache::residents() const {
  std::vector<ContentId> out;
  for (const auto& [count, c] : ranked_) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

void RandomCache::step(ContentId c, CacheEvent event, Rng& rng) {
  if (capacity_ == 0 || event != CacheEvent::kDelivered || contains(c)) return;
  if (items_.size() < capacity_) {
    slot_[c] = static_cast<std::uint32_t>(items_.size());
    items_.push_back(c);
    return;
  }
  const std::size_t victim = UniformIndex(rng, items_.size());
  slot_[items_[victim]] = kAbsent;
  items_[victim] = c;
  slot_[c] = static_cast<std::uint32_t>(victim);
}

CacheState MakeCacheState(DynamicPolicy policy, std::uint32_t capacity,
                          std::size_t content_count) {
  switch (policy) {
    case DynamicPolicy::kLRU: return LruCache(capacity, content_count);
    case DynamicPolicy::kLFU: return LfuCache(capacity, capacity > 0 ? content_count : 0);
    case DynamicPolicy::kRandom: return RandomCache(capacity, content_count);
  }
  throw ConfigError("unknown dynamic policy");
}

bool Contains(const CacheState& state, ContentId c) {
  return std::visit(
      [c](const auto& cache) { return cache.capacity() > 0 && cache.contains(c); }, state);
}

std::size_t Occupancy(const CacheState& state) {
  return std::visit([](const auto& cache) { return cache.size(); }, state);
}

void ReplacementStep(CacheState& state, ContentId c, CacheEvent event, Rng& rng) {
  if (auto* r = std::get_if<RandomCache>(&state)) {
    r->step(c, event, rng);
    return;
  }
  std::visit(
      [&](auto& cache) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(cache)>, RandomCache>) {
          cache.step(c, event);
        }
      },
      state);
}

void Validate(const SimConfig& cfg) {
  if (!cfg.topology || !cfg.catalog || !cfg.cache_config) {
    throw ConfigError("simulation needs topology, catalog and cache configuration");
  }
  if (!(cfg.arrival_prob > 0.0 && cfg.arrival_prob <= 1.0)) {
    throw ConfigError("arrival_prob must lie in (0, 1]");
  }
  if (cfg.warmup_slots >= cfg.slots) throw ConfigError("warmup_slots must be below slots");
  const std::size_t n = cfg.topology->node_count();
  if (n < 2) throw ConfigError("simulation needs at least two nodes");
  if (cfg.cache_config->budgets.size() != n) {
    throw ConfigError("cache budgets do not match the topology's node count");
  }
  if ((cfg.requesters == RequesterSet::kLeaves || cfg.servers == ServerPlacement::kRoot) &&
      !cfg.topology->has_layers()) {
    throw ConfigError("leaf requesters and root servers need a tree topology");
  }
  if (const auto* real = std::get_if<PlacementRealization>(&cfg.policy)) {
    if (real->per_node.size() != n) {
      throw ConfigError("placement realization does not match the topology");
    }
    for (NodeId v = 0; v < n; ++v) {
      if (real->per_node[v].size() > cfg.cache_config->budgets[v]) {
        throw InvariantError("placement exceeds budget at node " + std::to_string(v));
      }
      for (ContentId c : real->per_node[v]) {
        if (c >= cfg.catalog->size()) throw ConfigError("placement names an unknown content");
      }
    }
  }
}

double StudentT975(std::size_t dof) {
  if (dof == 0) return 0.0;
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

namespace {

constexpr int kBatches = 20;

double HalfWidth(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return StudentT975(xs.size() - 1) * sd / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace

SimResult Run(const SimConfig& cfg) {
  Validate(cfg);
  const Topology& topo = *cfg.topology;
  const Catalog& cat = *cfg.catalog;
  const auto& budgets = cfg.cache_config->budgets;
  const std::size_t n = topo.node_count();

  // Server node per content.
  std::vector<NodeId> server(cat.size(), 0);
  if (cfg.servers == ServerPlacement::kUniformRandom) {
    Rng rng(SubstreamSeed(cfg.seed, 0x5e7e));
    for (auto& s : server) s = static_cast<NodeId>(UniformIndex(rng, n));
  }
  std::vector<NodeId> targets(server);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  const RoutingTable routes(topo, targets);

  std::vector<NodeId> requesters;
  if (cfg.requesters == RequesterSet::kLeaves) {
    requesters = topo.nodes_in_layer(topo.height());
  } else {
    requesters.resize(n);
    for (NodeId v = 0; v < n; ++v) requesters[v] = v;
  }

  const auto* placement = std::get_if<PlacementRealization>(&cfg.policy);
  const auto* dynamic = std::get_if<DynamicPolicy>(&cfg.policy);
  std::vector<CacheState> caches;
  if (dynamic != nullptr) {
    caches.reserve(n);
    for (NodeId v = 0; v < n; ++v) {
      caches.push_back(MakeCacheState(*dynamic, budgets[v], cat.size()));
    }
  }

  Rng traffic(SubstreamSeed(cfg.seed, 0x7a4f));
  Rng evict(SubstreamSeed(cfg.seed, 0xe71c));

  const std::uint64_t measured = cfg.slots - cfg.warmup_slots;
  const std::uint64_t batch_len = std::max<std::uint64_t>(1, measured / kBatches);
  std::vector<double> batch_sum, batch_count;
  double sum = 0.0;
  std::uint64_t count = 0, server_hits = 0;
  std::map<std::uint32_t, double> dist_sum;
  std::map<std::uint32_t, std::uint64_t> dist_count;
  std::map<int, std::uint64_t> layer_hits;
  std::vector<NodeId> missed;

  for (std::uint64_t slot = 0; slot < cfg.slots; ++slot) {
    const bool measure = slot >= cfg.warmup_slots;
    std::size_t batch = 0;
    if (measure) {
      batch = std::min<std::uint64_t>((slot - cfg.warmup_slots) / batch_len, kBatches - 1);
      if (batch >= batch_sum.size()) {
        batch_sum.resize(batch + 1, 0.0);
        batch_count.resize(batch + 1, 0.0);
      }
    }
    for (NodeId requester : requesters) {
      if (!Bernoulli(traffic, cfg.arrival_prob)) continue;
      const ContentId c = SampleContent(cat, traffic);
      const NodeId target = server[c];
      NodeId src = requester;
      if (src == target) {
        // Requester resampled uniformly among the other nodes.
        auto idx = static_cast<NodeId>(UniformIndex(traffic, n - 1));
        src = idx >= target ? idx + 1 : idx;
      }
      const std::uint32_t d = routes.distance(src, target);
      std::uint32_t delay = d;
      NodeId x = src;
      missed.clear();
      for (std::uint32_t l = 1; l < d; ++l) {
        bool hit;
        if (placement != nullptr) {
          hit = budgets[x] > 0 && placement->holds(x, c);
        } else {
          hit = Contains(caches[x], c);
          if (budgets[x] > 0) {
            ReplacementStep(caches[x], c, hit ? CacheEvent::kHit : CacheEvent::kMissPassThrough,
                            evict);
          }
        }
        if (hit) {
          delay = l;
          if (measure && topo.has_layers()) ++layer_hits[topo.layer(x)];
          break;
        }
        if (budgets[x] > 0) missed.push_back(x);
        x = routes.next_hop(x, target);
      }
      if (dynamic != nullptr) {
        const std::size_t inserts =
            cfg.insert_on == InsertOn::kDelivery ? missed.size()
                                                 : std::min<std::size_t>(1, missed.size());
        const bool first_hop_only = cfg.insert_on == InsertOn::kFirstHop;
        for (std::size_t k = 0; k < inserts; ++k) {
          const NodeId v = missed[k];
          if (first_hop_only && v != src) break;
          ReplacementStep(caches[v], c, CacheEvent::kDelivered, evict);
          if (cfg.check_budgets && Occupancy(caches[v]) > budgets[v]) {
            throw InvariantError("cache at node " + std::to_string(v) + " exceeds its budget");
          }
        }
      }
      if (delay < 1 || delay > d) throw InvariantError("request delay outside [1, d]");
      if (!measure) continue;
      if (delay == d) ++server_hits;
      sum += delay;
      ++count;
      dist_sum[d] += delay;
      ++dist_count[d];
      batch_sum[batch] += delay;
      batch_count[batch] += 1.0;
    }
  }

  SimResult out;
  out.seed = cfg.seed;
  out.request_count = count;
  if (count == 0) return out;
  out.mean_delay = sum / static_cast<double>(count);
  std::vector<double> batch_means;
  for (std::size_t b = 0; b < batch_sum.size(); ++b) {
    if (batch_count[b] > 0) batch_means.push_back(batch_sum[b] / batch_count[b]);
  }
  out.ci95_halfwidth = HalfWidth(batch_means);
  for (const auto& [d, total] : dist_sum) {
    out.per_distance_mean[d] = total / static_cast<double>(dist_count[d]);
  }
  out.per_distance_count = dist_count;
  for (const auto& [layer, hits] : layer_hits) {
    out.hit_rate_per_layer[layer] = static_cast<double>(hits) / static_cast<double>(count);
  }
  out.server_fraction = static_cast<double>(server_hits) / static_cast<double>(count);
  return out;
}

Aggregate Summarize(std::span<const SimResult> runs) {
  Aggregate out;
  if (runs.empty()) return out;
  for (const auto& r : runs) out.per_seed.push_back(r.mean_delay);
  double sum = 0.0;
  for (double x : out.per_seed) sum += x;
  out.mean = sum / static_cast<double>(out.per_seed.size());
  out.ci95_halfwidth = runs.size() == 1 ? runs.front().ci95_halfwidth : HalfWidth(out.per_seed);
  return out;
}

std::vector<SimResult> RunSeeds(const std::function<SimConfig(std::uint64_t)>& make,
                                std::span<const std::uint64_t> seeds, int workers) {
  std::vector<SimResult> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        results[i] = Run(make(seeds[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp<int>(workers, 1, static_cast<int>(std::max<std::size_t>(1, seeds.size())));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::string PolicyChoiceName(const PolicyChoice& choice) {
  if (const auto* k = std::get_if<PolicyKind>(&choice)) return PolicyName(*k);
  return DynamicPolicyName(std::get<DynamicPolicy>(choice));
}

PolicyChoice ParsePolicyChoice(const std::string& name) {
  std::string key;
  for (char ch : name) {
    if (ch == '-' || ch == '_') continue;
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  }
  if (key == "LRU") return DynamicPolicy::kLRU;
  if (key == "LFU") return DynamicPolicy::kLFU;
  if (key == "RANDOM" || key == "RANDOMREPLACE") return DynamicPolicy::kRandom;
  return ParsePolicy(name);
}

Scenario MakeScenario(const std::string& name, const ScenarioOverrides& o) {
  Scenario sc;
  sc.name = name;
  const double alpha = o.alpha.value_or(1.0);
  if (name == "I") {
    sc.topology = o.topology ? o.topology : std::make_shared<const Topology>(BuildLine(200));
    sc.catalog = std::make_shared<const Catalog>(o.content_count.value_or(400), alpha);
    sc.s = o.s.value_or(50);
  } else if (name == "II") {
    if (o.topology) {
      sc.topology = o.topology;
    } else {
      if (!o.topology_file || o.topology_file->empty()) {
        throw ConfigError("scenario II needs a topology_file (GraphML)");
      }
      sc.topology = std::make_shared<const Topology>(LoadGraphml(*o.topology_file));
    }
    sc.catalog = std::make_shared<const Catalog>(o.content_count.value_or(3000), alpha);
    sc.s = o.s.value_or(5);
  } else if (name == "III") {
    if (o.topology) {
      const auto* kind = std::get_if<RegularTreeKind>(&o.topology->kind());
      if (kind == nullptr || kind->r != 2) {
        throw ConfigError("scenario III requires a regular tree with r=2");
      }
      sc.topology = o.topology;
    } else {
      const int h = o.tree_h.value_or(15);
      if (h < 1) throw ConfigError("scenario III needs tree height >= 1");
      sc.topology = std::make_shared<const Topology>(BuildRegularTree(2, h));
    }
    const int h = sc.topology->height();
    sc.catalog = std::make_shared<const Catalog>(o.content_count.value_or(3000), alpha);
    sc.s = o.s.value_or(5);
    sc.servers = ServerPlacement::kRoot;
    sc.requesters = RequesterSet::kLeaves;
    for (int c = std::max(0, h - 4); c <= h; ++c) sc.default_cut_layers.push_back(c);
  } else {
    throw ConfigError("unknown scenario '" + name + "' (expected I, II or III)");
  }
  if (sc.s < 1) throw ConfigError("cache size s must be at least 1");
  const std::size_t n = sc.topology->node_count();
  sc.total_budget = o.total_budget.value_or(static_cast<std::uint64_t>(n) * sc.s);
  if (o.total_budget && name != "III") {
    throw ConfigError("total_budget applies to scenario III only");
  }
  sc.d_bar = name == "III" ? static_cast<double>(sc.topology->height())
                           : ComputeDistanceModel(*sc.topology).d_bar;
  sc.slots = o.slots.value_or(100000);
  sc.warmup_fraction = o.warmup_fraction;
  sc.arrival_prob = o.arrival_prob.value_or(0.5);
  sc.insert_on = o.insert_on.value_or(InsertOn::kDelivery);
  sc.rounding = o.rounding.value_or(CutRounding::kCeil);
  const int seeds = o.seed_count.value_or(10);
  if (seeds < 1) throw ConfigError("at least one seed is required");
  for (int k = 1; k <= seeds; ++k) sc.seeds.push_back(static_cast<std::uint64_t>(k));
  return sc;
}

namespace {

CacheConfig ScenarioCacheConfig(const Scenario& sc, std::optional<int> cut_layer) {
  if (sc.topology->has_layers() && sc.name == "III") {
    return BowConfig(*sc.topology, cut_layer.value_or(sc.topology->height()), sc.total_budget);
  }
  if (cut_layer) throw ConfigError("cut layers apply to tree scenarios only");
  return HomogeneousConfig(sc.topology->node_count(), sc.s);
}

}  // namespace

PlacementDistribution ScenarioDistribution(const Scenario& sc, PolicyKind policy,
                                           const CacheConfig& cfg,
                                           std::optional<int> /*cut_layer*/) {
  if (policy == PolicyKind::kLBND) {
    throw ConfigError("LBND is an analytical reference and cannot be simulated");
  }
  PlacementPolicy p;
  p.kind = policy;
  p.rounding = sc.rounding;
  if (const auto* bow = std::get_if<BowSizing>(&cfg.sizing)) {
    p.s = bow->black_budget_per_node;
    p.d_bar = std::max(1, bow->cut_layer);
  } else {
    p.s = sc.s;
    p.d_bar = sc.d_bar;
  }
  return MakePlacementDistribution(*sc.catalog, p);
}

SimConfig MakeSimConfig(const Scenario& sc, const PolicyChoice& policy, std::uint64_t seed,
                        std::optional<int> cut_layer) {
  auto cache = std::make_shared<const CacheConfig>(ScenarioCacheConfig(sc, cut_layer));
  SimConfig cfg;
  cfg.topology = sc.topology;
  cfg.catalog = sc.catalog;
  cfg.cache_config = cache;
  const bool is_dynamic = std::holds_alternative<DynamicPolicy>(policy);
  if (is_dynamic) {
    cfg.policy = std::get<DynamicPolicy>(policy);
  } else {
    const auto dist = ScenarioDistribution(sc, std::get<PolicyKind>(policy), *cache, cut_layer);
    cfg.policy = Realize(dist, *cache, SubstreamSeed(seed, 0x91a));
  }
  cfg.arrival_prob = sc.arrival_prob;
  cfg.slots = sc.slots;
  const double warm = sc.warmup_fraction.value_or(is_dynamic ? 0.3 : 0.1);
  if (!(warm >= 0.0 && warm < 1.0)) throw ConfigError("warmup fraction must lie in [0, 1)");
  cfg.warmup_slots = static_cast<std::uint64_t>(std::floor(warm * static_cast<double>(sc.slots)));
  cfg.seed = seed;
  cfg.servers = sc.servers;
  cfg.requesters = sc.requesters;
  cfg.insert_on = sc.insert_on;
  return cfg;
}

}  // namespace cachenet
