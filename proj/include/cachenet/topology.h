#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cachenet/errors.h"

namespace cachenet {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

struct LineKind {};
struct RegularTreeKind {
  int r = 2;  // child fan-out of non-root internal nodes
  int h = 1;  // number of layers below the root
};
struct ErdosRenyiKind {
  double p = 0.0;
  int attempts = 0;                 // samples drawn before success / giving up
  bool giant_component = false;     // true if the largest component was taken
  std::size_t requested_nodes = 0;
};
struct PowerLawKind {
  double gamma = 2.5;
  std::size_t requested_nodes = 0;
  int attempts = 0;
};
struct ImportedKind {
  std::string name;
  std::size_t file_nodes = 0;
  std::size_t file_edges = 0;
};

using TopologyKind = std::variant<LineKind, RegularTreeKind, ErdosRenyiKind,
                                  PowerLawKind, ImportedKind>;

std::string KindName(const TopologyKind& kind);

// Immutable, connected, simple undirected graph stored as CSR adjacency with
// neighbor lists sorted ascending.
class Topology {
 public:
  // Validates: endpoints in range, no self-loops, no duplicate edges,
  // connectivity. Throws ConfigError otherwise.
  Topology(std::size_t node_count, std::vector<Edge> edges, TopologyKind kind);

  std::size_t node_count() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  double average_degree() const {
    return 2.0 * static_cast<double>(edge_count()) /
           static_cast<double>(node_count());
  }
  const TopologyKind& kind() const { return kind_; }

  // Layer of each node for RegularTree topologies (root = 0); empty otherwise.
  bool has_layers() const { return !layers_.empty(); }
  int layer(NodeId v) const { return layers_.at(v); }
  int height() const;  // RegularTree only
  std::vector<NodeId> nodes_in_layer(int layer) const;

 private:
  std::vector<Edge> edges_;  // normalized (min, max), sorted
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
  TopologyKind kind_;
  std::vector<int> layers_;
};

// Path graph 0-1-...-(n-1).
Topology BuildLine(std::size_t n);

// (r+1)-regular spanning tree: the root has r+1 children, every other internal
// node has r. Nodes are numbered in breadth-first order, root = 0.
Topology BuildRegularTree(int r, int h);
std::size_t RegularTreeNodeCount(int r, int h);

// G(n, p). Up to `max_attempts` samples are drawn; if none is connected, the
// largest component of the last sample is returned (relabelled) and the kind
// records it.
Topology BuildErdosRenyi(std::size_t n, double p, std::uint64_t seed,
                         int max_attempts = 100);

// Configuration model with degree distribution P(k) ~ k^-gamma on
// k in [1, n-1], self-loops and multi-edges erased, giant component kept.
Topology BuildPowerLaw(std::size_t n, double gamma, std::uint64_t seed);

// GraphML subset (graphml > graph > node|edge). Treated as undirected; self
// loops and parallel edges dropped; the largest connected component is kept.
Topology LoadGraphml(const std::string& path);
Topology ParseGraphml(const std::string& xml, const std::string& name);
// Minimal undirected GraphML with nodes n0..n(N-1).
std::string ToGraphml(const Topology& t);

// Returns the subgraph induced by the largest connected component, with nodes
// relabelled in ascending order of their original ids.
std::pair<std::size_t, std::vector<Edge>> LargestComponent(
    std::size_t n, const std::vector<Edge>& edges);

// Hop distances from `source` (unreachable = kUnreachable).
inline constexpr std::uint32_t kUnreachable = 0xffffffffu;
std::vector<std::uint32_t> BfsDistances(const Topology& t, NodeId source);

// Shortest path u..v inclusive. At each step the lowest-numbered neighbor that
// is one hop closer to v is taken.
std::vector<NodeId> ShortestPath(const Topology& t, NodeId u, NodeId v);

struct ExactAllPairs {};
struct SampledPairs {
  std::size_t count = 0;
  std::uint64_t seed = 0;
};
using DistanceMode = std::variant<ExactAllPairs, SampledPairs>;

// Distribution of hop distance between a uniformly random ordered pair
// (requester, server node) with requester != server node.
struct DistanceModel {
  std::map<std::uint32_t, double> f;  // d -> probability, d >= 1
  double d_bar = 0.0;
  DistanceMode source;
  std::size_t pairs = 0;  // pairs enumerated or sampled
};

// Exact all-pairs BFS is used for n <= this; above, sampled pairs.
inline constexpr std::size_t kExactDistanceLimit = 20000;

DistanceModel ComputeDistanceModel(const Topology& t, const DistanceMode& mode);
// Picks ExactAllPairs when n <= kExactDistanceLimit, else 100*n sampled pairs.
DistanceModel ComputeDistanceModel(const Topology& t, std::uint64_t seed = 1);
DistanceModel MakeDistanceModel(std::map<std::uint32_t, double> f);

// Next-hop tables toward a fixed set of target nodes. Immutable after
// construction.
class RoutingTable {
 public:
  RoutingTable(const Topology& t, std::span<const NodeId> targets);

  // Hop distance from u to target (target must be one of the table's targets).
  std::uint32_t distance(NodeId u, NodeId target) const {
    return dist_[slot(target) * n_ + u];
  }
  NodeId next_hop(NodeId u, NodeId target) const {
    return next_[slot(target) * n_ + u];
  }
  std::vector<NodeId> path(NodeId u, NodeId target) const;

 private:
  std::size_t slot(NodeId target) const {
    const std::uint32_t s = slot_of_[target];
    if (s == kUnreachable) throw InvariantError("node is not a routing target");
    return s;
  }

  std::size_t n_ = 0;
  std::vector<std::uint32_t> slot_of_;
  std::vector<std::uint32_t> dist_;
  std::vector<NodeId> next_;
};

}  // namespace cachenet
