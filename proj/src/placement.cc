#include "cachenet/placement.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace cachenet {

CacheConfig HomogeneousConfig(std::size_t node_count, std::uint32_t s) {
  CacheConfig cfg;
  cfg.budgets.assign(node_count, s);
  cfg.total_budget = static_cast<std::uint64_t>(node_count) * s;
  cfg.sizing = HomogeneousSizing{s};
  return cfg;
}

std::size_t BlackNodeCount(int r, int cut_layer) {
  if (cut_layer < 0) throw ConfigError("cut layer must be nonnegative");
  return cut_layer == 0 ? 1 : RegularTreeNodeCount(r, cut_layer);
}

CacheConfig BowConfig(const Topology& tree, int cut_layer, std::uint64_t total_budget) {
  const auto* kind = std::get_if<RegularTreeKind>(&tree.kind());
  if (kind == nullptr) throw ConfigError("BoW sizing requires a regular tree topology");
  if (cut_layer < 0 || cut_layer > kind->h) {
    throw ConfigError("cut layer exceeds tree height (c=" + std::to_string(cut_layer) +
                      ", h=" + std::to_string(kind->h) + ")");
  }
  const std::size_t black = BlackNodeCount(kind->r, cut_layer);
  if (total_budget < black) {
    throw ConfigError("BoW needs at least one cache slot per black node (B=" +
                      std::to_string(total_budget) + " < " + std::to_string(black) +
                      " black nodes)");
  }
  CacheConfig cfg;
  cfg.budgets.assign(tree.node_count(), 0);
  const std::uint64_t base = total_budget / black;
  std::uint64_t remainder = total_budget % black;
  // Breadth-first numbering puts layers 0..c at ids 0..black-1.
  for (NodeId v = 0; v < black; ++v) {
    cfg.budgets[v] = static_cast<std::uint32_t>(base + (remainder > 0 ? 1 : 0));
    if (remainder > 0) --remainder;
  }
  cfg.total_budget = total_budget;
  cfg.sizing = BowSizing{cut_layer, kind->h - cut_layer, black,
                         static_cast<std::uint32_t>(base)};
  return cfg;
}

bool PlacementRealization::holds(NodeId v, ContentId c) const {
  const auto& set = per_node[v];
  return std::binary_search(set.begin(), set.end(), c);
}

std::string PlacementRealization::ToJson() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["policy"] = PolicyName(policy);
  j["draw_model"] = draw_model == DrawModel::kWithoutReplacement ? "without_replacement"
                                                                 : "iid_collapse";
  j["per_node"] = per_node;
  return j.dump();
}

PlacementRealization PlacementRealization::FromJson(const std::string& text) {
  PlacementRealization out;
  try {
    const auto j = nlohmann::json::parse(text);
    out.seed = j.at("seed").get<std::uint64_t>();
    out.policy = ParsePolicy(j.at("policy").get<std::string>());
    out.draw_model = j.value("draw_model", "iid_collapse") == "without_replacement"
                         ? DrawModel::kWithoutReplacement
                         : DrawModel::kIidCollapse;
    out.per_node = j.at("per_node").get<std::vector<std::vector<ContentId>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid placement JSON: ") + e.what());
  }
  for (auto& set : out.per_node) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return out;
}

namespace {

std::vector<ContentId> DrawIid(const DiscreteSampler& sampler, std::uint32_t b, Rng& rng) {
  std::vector<ContentId> out(b);
  for (auto& c : out) c = sampler(rng);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Floyd's algorithm: uniform b-subset of [0, n).
std::vector<ContentId> DrawUniformSubset(std::size_t n, std::uint32_t b, Rng& rng) {
  std::vector<ContentId> out;
  out.reserve(b);
  for (std::size_t j = n - b; j < n; ++j) {
    const auto t = static_cast<ContentId>(UniformIndex(rng, j + 1));
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(static_cast<ContentId>(j));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ContentId> DrawDistinct(const PlacementDistribution& dist,
                                    const DiscreteSampler& sampler, std::size_t support,
                                    std::uint32_t b, Rng& rng) {
  if (b >= support) {
    std::vector<ContentId> all;
    for (std::size_t i = 0; i < dist.q.size(); ++i) {
      if (dist.q[i] > 0.0) all.push_back(static_cast<ContentId>(i));
    }
    return all;
  }
  if (dist.policy == PolicyKind::kURP) return DrawUniformSubset(dist.q.size(), b, rng);
  // Rejection of repeats is equivalent to drawing from q renormalized over the
  // contents not yet chosen.
  std::vector<ContentId> out;
  out.reserve(b);
  std::size_t tries = 0;
  while (out.size() < b && tries < 64 * static_cast<std::size_t>(b)) {
    const ContentId c = sampler(rng);
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    ++tries;
  }
  while (out.size() < b) {
    std::vector<double> rest(dist.q);
    for (ContentId c : out) rest[c] = 0.0;
    out.push_back(DiscreteSampler(rest)(rng));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

PlacementRealization Realize(const PlacementDistribution& dist, const CacheConfig& cfg,
                             std::uint64_t seed, DrawModel model) {
  if (model == DrawModel::kPolicyDefault) {
    model = dist.policy == PolicyKind::kURP ? DrawModel::kWithoutReplacement
                                            : DrawModel::kIidCollapse;
  }
  const DiscreteSampler sampler(dist.q);
  const auto support = static_cast<std::size_t>(
      std::count_if(dist.q.begin(), dist.q.end(), [](double x) { return x > 0.0; }));
  PlacementRealization out;
  out.seed = seed;
  out.policy = dist.policy;
  out.draw_model = model;
  out.per_node.resize(cfg.budgets.size());
  for (NodeId v = 0; v < cfg.budgets.size(); ++v) {
    const std::uint32_t b = cfg.budgets[v];
    if (b == 0) continue;
    Rng rng(SubstreamSeed(seed, 0x91ace, v));
    out.per_node[v] = model == DrawModel::kIidCollapse
                          ? DrawIid(sampler, b, rng)
                          : DrawDistinct(dist, sampler, support, b, rng);
  }
  return out;
}

std::vector<double> HitProbability(const PlacementDistribution& dist, std::uint32_t b) {
  std::vector<double> h(dist.q.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    // 1 - (1 - q)^b without cancellation for small q.
    h[i] = dist.q[i] >= 1.0 ? (b > 0 ? 1.0 : 0.0)
                            : -std::expm1(static_cast<double>(b) * std::log1p(-dist.q[i]));
  }
  return h;
}

double UrpExactHitProbability(std::size_t content_count, std::uint32_t b) {
  if (content_count == 0) throw ConfigError("empty catalog");
  return std::min<double>(b, static_cast<double>(content_count)) /
         static_cast<double>(content_count);
}

double LbndDelayGivenDistance(const Catalog& cat, std::uint32_t s, std::uint32_t d) {
  if (s < 1) throw ConfigError("LBND needs s >= 1");
  if (d < 1) throw ConfigError("LBND needs d >= 1");
  CompensatedSum sum;
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const std::uint64_t slot = i / s + 1;  // ceil((i+1) / s)
    sum.add(cat.p(static_cast<ContentId>(i)) * static_cast<double>(std::min<std::uint64_t>(slot, d)));
  }
  return sum.value();
}

}  // namespace cachenet
