#include "cachenet/topology.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "cachenet/random.h"

namespace cachenet {
namespace {

struct KindNamer {
  std::string operator()(const LineKind&) const { return "line"; }
  std::string operator()(const RegularTreeKind& k) const {
    return "tree(r=" + std::to_string(k.r) + ",h=" + std::to_string(k.h) + ")";
  }
  std::string operator()(const ErdosRenyiKind& k) const {
    std::ostringstream os;
    os << "er(p=" << k.p << (k.giant_component ? ",giant" : "") << ")";
    return os.str();
  }
  std::string operator()(const PowerLawKind& k) const {
    std::ostringstream os;
    os << "powerlaw(gamma=" << k.gamma << ")";
    return os.str();
  }
  std::string operator()(const ImportedKind& k) const {
    return "graphml(" + k.name + ")";
  }
};

// Component id per node; returns number of components.
std::size_t LabelComponents(std::size_t n, const std::vector<Edge>& edges,
                            std::vector<std::uint32_t>* label) {
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  label->assign(n, kUnreachable);
  std::size_t count = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < n; ++s) {
    if ((*label)[s] != kUnreachable) continue;
    (*label)[s] = static_cast<std::uint32_t>(count);
    stack.push_back(s);
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (NodeId w : adj[v]) {
        if ((*label)[w] == kUnreachable) {
          (*label)[w] = static_cast<std::uint32_t>(count);
          stack.push_back(w);
        }
      }
    }
    ++count;
  }
  return count;
}

std::vector<Edge> Simplify(std::vector<Edge> edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a == b) continue;
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::string KindName(const TopologyKind& kind) {
  return std::visit(KindNamer{}, kind);
}

Topology::Topology(std::size_t node_count, std::vector<Edge> edges,
                   TopologyKind kind)
    : kind_(std::move(kind)) {
  if (node_count == 0) throw ConfigError("topology has no nodes");
  for (auto& e : edges) {
    if (e.first >= node_count || e.second >= node_count) {
      throw ConfigError("edge endpoint out of range");
    }
    if (e.first == e.second) {
      throw ConfigError("self-loop at node " + std::to_string(e.first));
    }
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ConfigError("duplicate edge");
  }
  edges_ = std::move(edges);

  offsets_.assign(node_count + 1, 0);
  for (const auto& [a, b] : edges_) {
    ++offsets_[a + 1];
    ++offsets_[b + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  targets_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges_) {
    targets_[fill[a]++] = b;
    targets_[fill[b]++] = a;
  }
  for (std::size_t v = 0; v < node_count; ++v) {
    std::sort(targets_.begin() + offsets_[v], targets_.begin() + offsets_[v + 1]);
  }

  const auto dist = BfsDistances(*this, 0);
  if (std::find(dist.begin(), dist.end(), kUnreachable) != dist.end()) {
    throw ConfigError("topology is not connected");
  }

  if (const auto* tree = std::get_if<RegularTreeKind>(&kind_)) {
    layers_.assign(dist.begin(), dist.end());
    if (*std::max_element(layers_.begin(), layers_.end()) != tree->h) {
      throw InvariantError("regular tree layer count mismatch");
    }
  }
}

int Topology::height() const {
  const auto* tree = std::get_if<RegularTreeKind>(&kind_);
  if (tree == nullptr) throw ConfigError("topology is not a regular tree");
  return tree->h;
}

std::vector<NodeId> Topology::nodes_in_layer(int layer) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < layers_.size(); ++v) {
    if (layers_[v] == layer) out.push_back(v);
  }
  return out;
}

Topology BuildLine(std::size_t n) {
  if (n < 2) throw ConfigError("line topology needs n >= 2");
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (NodeId v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
  return Topology(n, std::move(edges), LineKind{});
}

std::size_t RegularTreeNodeCount(int r, int h) {
  if (r < 2 || h < 1) throw ConfigError("regular tree needs r >= 2 and h >= 1");
  std::size_t n = 1;
  std::size_t layer = static_cast<std::size_t>(r) + 1;
  for (int l = 1; l <= h; ++l) {
    n += layer;
    layer *= static_cast<std::size_t>(r);
  }
  return n;
}

Topology BuildRegularTree(int r, int h) {
  const std::size_t n = RegularTreeNodeCount(r, h);
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  // Breadth-first numbering: children of node v are contiguous.
  NodeId next = 1;
  for (NodeId v = 0; next < n; ++v) {
    const int children = v == 0 ? r + 1 : r;
    for (int c = 0; c < children && next < n; ++c) edges.emplace_back(v, next++);
  }
  return Topology(n, std::move(edges), RegularTreeKind{r, h});
}

std::pair<std::size_t, std::vector<Edge>> LargestComponent(
    std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::uint32_t> label;
  const std::size_t count = LabelComponents(n, edges, &label);
  std::vector<std::size_t> size(count, 0);
  for (auto l : label) ++size[l];
  // Ties go to the component containing the lowest node id.
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < count; ++c) {
    if (size[c] > size[best]) best = c;
  }
  std::vector<NodeId> relabel(n, kUnreachable);
  std::size_t k = 0;
  for (NodeId v = 0; v < n; ++v) {
    if (label[v] == best) relabel[v] = static_cast<NodeId>(k++);
  }
  std::vector<Edge> out;
  for (const auto& [a, b] : edges) {
    if (label[a] == best && label[b] == best) out.emplace_back(relabel[a], relabel[b]);
  }
  return {k, out};
}

Topology BuildErdosRenyi(std::size_t n, double p, std::uint64_t seed,
                         int max_attempts) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("ER edge probability must be in (0, 1]");
  if (n < 2) throw ConfigError("ER topology needs n >= 2");
  if (max_attempts < 1) throw ConfigError("ER needs at least one attempt");
  std::vector<Edge> edges;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    Rng rng(SubstreamSeed(seed, 0xe5, static_cast<std::uint64_t>(attempt)));
    edges.clear();
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        if (Bernoulli(rng, p)) edges.emplace_back(a, b);
      }
    }
    std::vector<std::uint32_t> label;
    if (LabelComponents(n, edges, &label) == 1) {
      return Topology(n, std::move(edges), ErdosRenyiKind{p, attempt, false, n});
    }
  }
  auto [k, giant] = LargestComponent(n, edges);
  if (k < 2) throw ConfigError("ER sample has no component with an edge");
  return Topology(k, std::move(giant), ErdosRenyiKind{p, max_attempts, true, n});
}

Topology BuildPowerLaw(std::size_t n, double gamma, std::uint64_t seed) {
  if (n < 10) throw ConfigError("power-law topology needs n >= 10");
  if (!(gamma > 1.0)) throw ConfigError("power-law exponent must exceed 1");
  // Inverse-CDF table for P(k) ~ k^-gamma, k = 1..n-1.
  std::vector<double> cdf(n - 1);
  double acc = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    acc += std::pow(static_cast<double>(k), -gamma);
    cdf[k - 1] = acc;
  }
  for (double& c : cdf) c /= acc;
  Rng rng(SubstreamSeed(seed, 0x91));
  auto draw = [&] {
    const double u = UniformUnit(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<std::size_t>(it - cdf.begin()) + 1;
  };
  std::vector<std::size_t> degree(n);
  std::size_t total = 0;
  for (auto& d : degree) {
    d = draw();
    total += d;
  }
  int attempts = 0;
  while (total % 2 != 0) {
    if (++attempts > 100) throw ConfigError("degree sequence sum stayed odd");
    const auto v = UniformIndex(rng, n);
    total -= degree[v];
    degree[v] = draw();
    total += degree[v];
  }
  std::vector<NodeId> stubs;
  stubs.reserve(total);
  for (NodeId v = 0; v < n; ++v) stubs.insert(stubs.end(), degree[v], v);
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::vector<Edge> edges;
  edges.reserve(total / 2);
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    edges.emplace_back(stubs[i], stubs[i + 1]);
  }
  auto [k, giant] = LargestComponent(n, Simplify(std::move(edges)));
  if (k < 2) throw ConfigError("power-law sample has no component with an edge");
  return Topology(k, std::move(giant), PowerLawKind{gamma, n, attempts + 1});
}

Topology ParseGraphml(const std::string& xml, const std::string& name) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  std::istringstream in(xml);
  try {
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw ConfigError("malformed GraphML '" + name + "': " + e.message() +
                      " at line " + std::to_string(e.line()));
  }
  const auto root = doc.get_child_optional("graphml");
  if (!root) throw ConfigError("GraphML '" + name + "': missing <graphml> element");
  const auto graph = root->get_child_optional("graph");
  if (!graph) throw ConfigError("GraphML '" + name + "': missing <graph> element");

  std::unordered_map<std::string, NodeId> ids;
  std::vector<Edge> raw;
  std::size_t node_index = 0;
  std::size_t edge_index = 0;
  for (const auto& [tag, child] : *graph) {
    if (tag == "node") {
      const auto id = child.get_optional<std::string>("<xmlattr>.id");
      if (!id) {
        throw ConfigError("GraphML '" + name + "': <node> #" +
                          std::to_string(node_index) + " has no id attribute");
      }
      if (!ids.emplace(*id, static_cast<NodeId>(ids.size())).second) {
        throw ConfigError("GraphML '" + name + "': <node id=\"" + *id +
                          "\"> is declared twice");
      }
      ++node_index;
    }
  }
  for (const auto& [tag, child] : *graph) {
    if (tag != "edge") continue;
    const auto src = child.get_optional<std::string>("<xmlattr>.source");
    const auto dst = child.get_optional<std::string>("<xmlattr>.target");
    const std::string where = "<edge> #" + std::to_string(edge_index);
    if (!src || !dst) {
      throw ConfigError("GraphML '" + name + "': " + where +
                        " lacks source/target attributes");
    }
    const auto a = ids.find(*src);
    const auto b = ids.find(*dst);
    if (a == ids.end() || b == ids.end()) {
      throw ConfigError("GraphML '" + name + "': " + where + " (" + *src + " -> " +
                        *dst + ") references an undeclared node");
    }
    raw.emplace_back(a->second, b->second);
    ++edge_index;
  }
  if (ids.empty()) throw ConfigError("GraphML '" + name + "': graph has no nodes");
  auto [k, giant] = LargestComponent(ids.size(), Simplify(raw));
  if (k < 2) {
    throw ConfigError("GraphML '" + name + "': largest component has no edges");
  }
  return Topology(k, std::move(giant), ImportedKind{name, ids.size(), edge_index});
}

std::string ToGraphml(const Topology& t) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
  for (NodeId v = 0; v < t.node_count(); ++v) out << "    <node id=\"n" << v << "\"/>\n";
  for (const auto& [a, b] : t.edges()) {
    out << "    <edge source=\"n" << a << "\" target=\"n" << b << "\"/>\n";
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

Topology LoadGraphml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open GraphML file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (const auto dot = name.rfind(".graphml"); dot != std::string::npos) {
    name = name.substr(0, dot);
  }
  return ParseGraphml(buffer.str(), name);
}

std::vector<std::uint32_t> BfsDistances(const Topology& t, NodeId source) {
  std::vector<std::uint32_t> dist(t.node_count(), kUnreachable);
  std::vector<NodeId> queue;
  queue.reserve(t.node_count());
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId v = queue[head];
    for (NodeId w : t.neighbors(v)) {
      if (dist[w] == kUnreachable) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

std::vector<NodeId> ShortestPath(const Topology& t, NodeId u, NodeId v) {
  if (u >= t.node_count() || v >= t.node_count()) {
    throw ConfigError("shortest path endpoint out of range");
  }
  if (u == v) return {u};
  const auto dist = BfsDistances(t, v);
  if (dist[u] == kUnreachable) throw InvariantError("node unreachable");
  std::vector<NodeId> path{u};
  NodeId x = u;
  while (x != v) {
    for (NodeId w : t.neighbors(x)) {
      if (dist[w] + 1 == dist[x]) {
        x = w;
        break;
      }
    }
    path.push_back(x);
  }
  return path;
}

DistanceModel MakeDistanceModel(std::map<std::uint32_t, double> f) {
  DistanceModel dm;
  double total = 0.0;
  for (const auto& [d, pr] : f) {
    if (d < 1) throw ConfigError("distance model needs d >= 1");
    if (pr < 0.0) throw ConfigError("negative distance probability");
    total += pr;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("distance probabilities must sum to 1");
  for (const auto& [d, pr] : f) dm.d_bar += d * pr;
  dm.f = std::move(f);
  dm.source = ExactAllPairs{};
  return dm;
}

namespace {

DistanceModel FromHistogram(const std::map<std::uint32_t, std::uint64_t>& counts,
                            std::uint64_t pairs, DistanceMode mode) {
  DistanceModel dm;
  dm.source = mode;
  dm.pairs = pairs;
  long double weighted = 0.0;
  for (const auto& [d, c] : counts) {
    dm.f[d] = static_cast<double>(c) / static_cast<double>(pairs);
    weighted += static_cast<long double>(d) * c;
  }
  dm.d_bar = static_cast<double>(weighted / pairs);
  return dm;
}

}  // namespace

DistanceModel ComputeDistanceModel(const Topology& t, const DistanceMode& mode) {
  const std::size_t n = t.node_count();
  if (n < 2) throw ConfigError("distance model needs at least two nodes");
  std::map<std::uint32_t, std::uint64_t> counts;
  std::uint64_t pairs = 0;
  if (std::holds_alternative<ExactAllPairs>(mode)) {
    std::vector<std::uint64_t> hist;
    for (NodeId s = 0; s < n; ++s) {
      const auto dist = BfsDistances(t, s);
      for (NodeId v = 0; v < n; ++v) {
        if (v == s) continue;
        if (dist[v] >= hist.size()) hist.resize(dist[v] + 1, 0);
        ++hist[dist[v]];
      }
    }
    for (std::uint32_t d = 1; d < hist.size(); ++d) {
      if (hist[d] > 0) counts[d] = hist[d];
    }
    pairs = static_cast<std::uint64_t>(n) * (n - 1);
    return FromHistogram(counts, pairs, mode);
  }
  const auto& sampled = std::get<SampledPairs>(mode);
  if (sampled.count == 0) throw ConfigError("sampled distance model needs count > 0");
  // Sources are drawn uniformly and each contributes a batch of uniformly drawn
  // targets, which bounds the number of BFS runs to 1000.
  const std::size_t sources = std::min<std::size_t>(sampled.count, 1000);
  const std::size_t per_source = (sampled.count + sources - 1) / sources;
  Rng rng(SubstreamSeed(sampled.seed, 0xd157));
  for (std::size_t k = 0; k < sources; ++k) {
    const auto s = static_cast<NodeId>(UniformIndex(rng, n));
    const auto dist = BfsDistances(t, s);
    for (std::size_t j = 0; j < per_source; ++j) {
      auto v = static_cast<NodeId>(UniformIndex(rng, n - 1));
      if (v >= s) ++v;
      ++counts[dist[v]];
      ++pairs;
    }
  }
  return FromHistogram(counts, pairs, mode);
}

DistanceModel ComputeDistanceModel(const Topology& t, std::uint64_t seed) {
  if (t.node_count() <= kExactDistanceLimit) {
    return ComputeDistanceModel(t, ExactAllPairs{});
  }
  return ComputeDistanceModel(t, SampledPairs{100 * t.node_count(), seed});
}

RoutingTable::RoutingTable(const Topology& t, std::span<const NodeId> targets)
    : n_(t.node_count()), slot_of_(t.node_count(), kUnreachable) {
  std::vector<NodeId> unique(targets.begin(), targets.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  dist_.resize(unique.size() * n_);
  next_.resize(unique.size() * n_);
  for (std::size_t k = 0; k < unique.size(); ++k) {
    const NodeId target = unique.at(k);
    if (target >= n_) throw ConfigError("routing target out of range");
    slot_of_[target] = static_cast<std::uint32_t>(k);
    const auto dist = BfsDistances(t, target);
    std::copy(dist.begin(), dist.end(), dist_.begin() + k * n_);
    for (NodeId v = 0; v < n_; ++v) {
      NodeId hop = v;
      for (NodeId w : t.neighbors(v)) {
        if (dist[w] + 1 == dist[v]) {
          hop = w;
          break;
        }
      }
      next_[k * n_ + v] = hop;
    }
  }
}

std::vector<NodeId> RoutingTable::path(NodeId u, NodeId target) const {
  std::vector<NodeId> out{u};
  while (u != target) {
    u = next_hop(u, target);
    out.push_back(u);
  }
  return out;
}

}  // namespace cachenet
