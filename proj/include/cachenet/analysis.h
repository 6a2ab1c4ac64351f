#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cachenet/catalog.h"
#include "cachenet/topology.h"

namespace cachenet {

// Expected hops for one content when each of the d-1 caches on the path holds
// it independently with probability h, and the server sits at hop d.
// Evaluated as (1 - (1-h)^d) / h, and exactly d when h == 0.
double XiDelay(double h, std::uint32_t d);

// Delta(d) = sum_i p_i * XiDelay(h_i, d).
double DeltaGivenDistance(const Catalog& cat, std::span<const double> h, std::uint32_t d);

// Sum over the distance distribution of f_d * delta_fn(d).
double AverageDelay(const DistanceModel& dm,
                    const std::function<double(std::uint32_t)>& delta_fn);

// delta_fn(d_bar): an upper bound on AverageDelay when delta_fn is concave.
double JensenUpper(double d_bar, const std::function<double(double)>& delta_fn);

// URP closed form (|C|/s)(1 - (1 - s/|C|)^d), accepting real-valued d so it can
// feed JensenUpper. Hit probability is clamped to 1 when s >= |C|.
double UrpDelay(std::size_t content_count, double s, double d);

enum class AlphaRegime { kGt2, kEq2, kBetween1And2, kEq1, kLt1 };
AlphaRegime RegimeOf(double alpha);
std::string RegimeName(AlphaRegime regime);

enum class BoundKind { kExact, kUpperBound, kLowerBound, kSimulated };
std::string BoundKindName(BoundKind kind);

struct BoundReport {
  PolicyKind policy = PolicyKind::kURP;
  AlphaRegime regime = AlphaRegime::kEq1;
  double alpha = 0.0;
  std::size_t content_count = 0;
  std::uint32_t s = 0;
  std::uint32_t d = 0;
  double d_bar = 0.0;
  double value = 0.0;
  BoundKind kind = BoundKind::kExact;
  std::size_t cut = 0;      // i* (PPP/TPP, minimizing) or cut index (TPP-C)
  std::string order_expr;   // the matching delay-order cell for this policy/regime
};

// Finite-sum evaluation of each policy's delay expression at distance d.
//   URP   exact closed form
//   PPP   1 + i*/s + d * sum_{i>i*} p_i, minimized over i*
//   TPP   1 + (K/K')/s * sum_{i<=i*} i^(-alpha/2) + d * sum_{i>i*} p_i, minimized
//   TPPC  1 + K/(s M^2) + d * sum_{i>cut} p_i with cut = min(ceil(s d_bar), |C|)
//   LBND  sum_{l=1..z} sum_{i>(l-1)s} p_i, z = min(d, ceil(|C|/s))
BoundReport PolicyBound(const Catalog& cat, PolicyKind policy, std::uint32_t s,
                        std::uint32_t d, double d_bar = 0.0);

// TPP expression at a fixed i* (1-based rank).
double TppBoundAt(const Catalog& cat, std::uint32_t s, std::uint32_t d, std::size_t i_star);
// PPP expression at a fixed i*.
double PppBoundAt(const Catalog& cat, std::uint32_t s, std::uint32_t d, std::size_t i_star);
// The asymptotic i* choice for TPP in each alpha regime, clamped to [1, |C|].
std::size_t PrescribedTppIStar(const Catalog& cat, std::uint32_t s, std::uint32_t d);

struct BowPoint {
  int m = 0;
  int cut_layer = 0;
  std::uint32_t per_node_budget = 0;
  double delta_black = 0.0;
  double value = 0.0;  // 2m + 2 * delta_black
};

// 2m + 2 * Delta_black(m) where Delta_black is the TPP-C expression with
// s = floor(B / black nodes) and d = d_bar = max(c, 1), c = h - m.
BowPoint BowCompositeBound(const Catalog& cat, const Topology& tree, std::uint64_t total_budget,
                           int m);

struct BowSweep {
  std::vector<BowPoint> points;  // feasible m in ascending order
  BowPoint best;
};
BowSweep SweepBow(const Catalog& cat, const Topology& tree, std::uint64_t total_budget);

enum class CurveAxis { kDistance, kCatalogSize, kNodeCount };

struct DelayCurve {
  CurveAxis axis = CurveAxis::kDistance;
  std::vector<std::pair<double, double>> points;  // (x, delay), x increasing
};

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
};

// Least-squares slope of log(delay) against log(x) over the middle portion of
// the curve: round(trim * n) points are dropped from each end, keeping at
// least four.
ExponentFit FitScalingExponent(const DelayCurve& curve, double trim = 0.1);

// CSV schema shared with the simulator.
inline constexpr const char* kBoundCsvHeader = "policy,alpha,C,s,d,d_bar,value,kind";
std::string ToCsvRow(const BoundReport& report);

}  // namespace cachenet
