#include "cachenet/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cachenet/csv.h"
#include "cachenet/placement.h"

namespace cachenet {

double XiDelay(double h, std::uint32_t d) {
  if (!(h >= 0.0 && h <= 1.0)) throw ConfigError("hit probability must lie in [0, 1]");
  if (d < 1) throw ConfigError("distance must be >= 1");
  if (h == 0.0) return static_cast<double>(d);
  if (h == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(d) * std::log1p(-h)) / h;
}

double DeltaGivenDistance(const Catalog& cat, std::span<const double> h, std::uint32_t d) {
  if (h.size() != cat.size()) throw ConfigError("hit vector length differs from catalog size");
  CompensatedSum sum;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sum.add(cat.p(static_cast<ContentId>(i)) * XiDelay(h[i], d));
  }
  return sum.value();
}

double AverageDelay(const DistanceModel& dm,
                    const std::function<double(std::uint32_t)>& delta_fn) {
  CompensatedSum sum;
  for (const auto& [d, f] : dm.f) sum.add(f * delta_fn(d));
  return sum.value();
}

double JensenUpper(double d_bar, const std::function<double(double)>& delta_fn) {
  if (!(d_bar >= 1.0)) throw ConfigError("Jensen bound needs d_bar >= 1");
  return delta_fn(d_bar);
}

double UrpDelay(std::size_t content_count, double s, double d) {
  if (content_count == 0) throw ConfigError("empty catalog");
  if (!(s > 0.0)) throw ConfigError("URP needs s > 0");
  const double h = std::min(1.0, s / static_cast<double>(content_count));
  if (h == 1.0) return 1.0;
  return -std::expm1(d * std::log1p(-h)) / h;
}

AlphaRegime RegimeOf(double alpha) {
  constexpr double kEps = 1e-9;
  if (std::abs(alpha - 2.0) < kEps) return AlphaRegime::kEq2;
  if (std::abs(alpha - 1.0) < kEps) return AlphaRegime::kEq1;
  if (alpha > 2.0) return AlphaRegime::kGt2;
  if (alpha > 1.0) return AlphaRegime::kBetween1And2;
  return AlphaRegime::kLt1;
}

std::string RegimeName(AlphaRegime regime) {
  switch (regime) {
    case AlphaRegime::kGt2: return "gt2";
    case AlphaRegime::kEq2: return "eq2";
    case AlphaRegime::kBetween1And2: return "between1and2";
    case AlphaRegime::kEq1: return "eq1";
    case AlphaRegime::kLt1: return "lt1";
  }
  return "?";
}

std::string BoundKindName(BoundKind kind) {
  switch (kind) {
    case BoundKind::kExact: return "exact";
    case BoundKind::kUpperBound: return "upper_bound";
    case BoundKind::kLowerBound: return "lower_bound";
    case BoundKind::kSimulated: return "simulated";
  }
  return "?";
}

namespace {

std::string OrderExpr(PolicyKind policy, AlphaRegime regime, bool tppc_cut_active) {
  using R = AlphaRegime;
  switch (policy) {
    case PolicyKind::kURP:
      return "Theta(min[d, |C|/s])";
    case PolicyKind::kPPP:
      switch (regime) {
        case R::kGt2:
        case R::kBetween1And2: return "O(min[(ds)^(1/alpha)/s, |C|/s])";
        case R::kEq2: return "O(min[sqrt(d/s), |C|/s])";
        case R::kEq1:
        case R::kLt1: return "Theta(min[d, |C|/s])";
      }
      break;
    case PolicyKind::kLBND:
      switch (regime) {
        case R::kGt2: return "Theta(1)";
        case R::kEq2: return "Theta(log(min[s*d, |C|])/s)";
        case R::kBetween1And2: return "Theta((min[s*d, |C|])^(2-alpha)/s)";
        case R::kEq1: return "Theta(min[d, |C|/(s*log|C|)])";
        case R::kLt1: return "Theta(min[d, |C|/s])";
      }
      break;
    case PolicyKind::kTPPC:
      if (tppc_cut_active) {
        switch (regime) {
          case R::kGt2: return "O(d/(s*dbar)^(alpha-1))";
          case R::kEq2: return "O(max[log^2(dbar), d/dbar]/s)";
          case R::kBetween1And2: return "O((s*dbar)^(1-alpha)*max[dbar, d])";
          case R::kEq1: return "O(max[dbar/log|C|, d])";
          case R::kLt1: return "O(max[dbar*(s*dbar/|C|)^(1-alpha), d])";
        }
      }
      [[fallthrough]];
    case PolicyKind::kTPP:
      switch (regime) {
        case R::kGt2: return "Theta(1)";
        case R::kEq2: return "O(min[d, log^2|C|/s, log|C|*log(s*d)/s])";
        case R::kBetween1And2:
          return "O(min[d, |C|^(2-alpha)/s, |C|^((2-alpha)(alpha-1)/alpha)*d^(2/alpha-1)/s^(2-2/alpha)])";
        case R::kEq1: return "O(min[d, |C|/(s*log|C|)])";
        case R::kLt1: return "O(min[d, |C|/s])";
      }
      break;
  }
  return "";
}

struct Minimized {
  double value = std::numeric_limits<double>::infinity();
  std::size_t i_star = 1;
};

// Minimizes 1 + head(i*) + d * tail(i*) over i* in [1, |C|] where head is a
// running sum of per-rank costs.
template <typename HeadTerm>
Minimized MinimizeCut(const Catalog& cat, std::uint32_t d, HeadTerm head_term) {
  Minimized best;
  CompensatedSum head;
  for (std::size_t k = 1; k <= cat.size(); ++k) {
    head.add(head_term(k));
    const double v = 1.0 + head.value() + static_cast<double>(d) * cat.tail(k);
    if (v < best.value) best = {v, k};
  }
  return best;
}

void CheckArgs(std::uint32_t s, std::uint32_t d) {
  if (s < 1) throw ConfigError("bound evaluation needs s >= 1");
  if (d < 1) throw ConfigError("bound evaluation needs d >= 1");
}

}  // namespace

double PppBoundAt(const Catalog& cat, std::uint32_t s, std::uint32_t d, std::size_t i_star) {
  CheckArgs(s, d);
  if (i_star < 1 || i_star > cat.size()) throw ConfigError("i* must lie in [1, |C|]");
  return 1.0 + static_cast<double>(i_star) / s + static_cast<double>(d) * cat.tail(i_star);
}

double TppBoundAt(const Catalog& cat, std::uint32_t s, std::uint32_t d, std::size_t i_star) {
  CheckArgs(s, d);
  if (i_star < 1 || i_star > cat.size()) throw ConfigError("i* must lie in [1, |C|]");
  const double half = cat.alpha() / 2.0;
  const double ratio = cat.normalizer() * ZipfHarmonic(cat.size(), half);  // K / K'
  return 1.0 + ratio / s * ZipfHarmonic(i_star, half) +
         static_cast<double>(d) * cat.tail(i_star);
}

std::size_t PrescribedTppIStar(const Catalog& cat, std::uint32_t s, std::uint32_t d) {
  const double c = static_cast<double>(cat.size());
  const double sd = static_cast<double>(s) * d;
  double raw = c;
  const double a = cat.alpha();
  switch (RegimeOf(a)) {
    case AlphaRegime::kGt2: raw = c; break;
    case AlphaRegime::kEq2: raw = c > 1.0 ? sd / std::log(c) : 1.0; break;
    case AlphaRegime::kBetween1And2:
      raw = std::pow(sd, 2.0 / a) / std::pow(c, 2.0 / a - 1.0);
      break;
    case AlphaRegime::kEq1: raw = sd * sd / c; break;
    case AlphaRegime::kLt1: raw = sd; break;
  }
  raw = std::clamp(std::floor(raw), 1.0, c);
  return static_cast<std::size_t>(raw);
}

BoundReport PolicyBound(const Catalog& cat, PolicyKind policy, std::uint32_t s,
                        std::uint32_t d, double d_bar) {
  CheckArgs(s, d);
  BoundReport r;
  r.policy = policy;
  r.alpha = cat.alpha();
  r.regime = RegimeOf(cat.alpha());
  r.content_count = cat.size();
  r.s = s;
  r.d = d;
  r.d_bar = d_bar;
  bool cut_active = false;
  switch (policy) {
    case PolicyKind::kURP:
      r.value = UrpDelay(cat.size(), s, d);
      r.kind = BoundKind::kExact;
      r.cut = cat.size();
      break;
    case PolicyKind::kPPP: {
      const auto best = MinimizeCut(cat, d, [&](std::size_t) { return 1.0 / s; });
      r.value = best.value;
      r.cut = best.i_star;
      r.kind = BoundKind::kUpperBound;
      break;
    }
    case PolicyKind::kTPP: {
      const double half = cat.alpha() / 2.0;
      const double ratio = cat.normalizer() * ZipfHarmonic(cat.size(), half);
      const auto best = MinimizeCut(cat, d, [&](std::size_t k) {
        return ratio / s * std::pow(static_cast<double>(k), -half);
      });
      r.value = best.value;
      r.cut = best.i_star;
      r.kind = BoundKind::kUpperBound;
      break;
    }
    case PolicyKind::kTPPC: {
      const std::size_t cut = TppcCutIndex(cat.size(), s, d_bar);
      r.kind = BoundKind::kUpperBound;
      if (cut >= cat.size()) {
        // No contents are cut, so the placement is TPP's.
        auto tpp = PolicyBound(cat, PolicyKind::kTPP, s, d, d_bar);
        r.value = tpp.value;
        r.cut = tpp.cut;
        break;
      }
      const double inv_m = ZipfHarmonic(cut, cat.alpha() / 2.0);
      r.value = 1.0 + cat.normalizer() * inv_m * inv_m / s +
                static_cast<double>(d) * cat.tail(cut);
      r.cut = cut;
      cut_active = true;
      break;
    }
    case PolicyKind::kLBND: {
      const std::size_t slots_needed = (cat.size() + s - 1) / s;
      const std::size_t z = std::min<std::size_t>(d, slots_needed);
      CompensatedSum sum;
      for (std::size_t l = 1; l <= z; ++l) sum.add(cat.tail((l - 1) * s));
      r.value = sum.value();
      r.kind = BoundKind::kExact;
      r.cut = cat.size();
      break;
    }
  }
  r.order_expr = OrderExpr(policy, r.regime, cut_active);
  return r;
}

BowPoint BowCompositeBound(const Catalog& cat, const Topology& tree, std::uint64_t total_budget,
                           int m) {
  const auto* kind = std::get_if<RegularTreeKind>(&tree.kind());
  if (kind == nullptr) throw ConfigError("BoW bound requires a regular tree topology");
  if (m < 0 || m > kind->h) throw ConfigError("m must lie in [0, h]");
  BowPoint pt;
  pt.m = m;
  pt.cut_layer = kind->h - m;
  const std::size_t black = BlackNodeCount(kind->r, pt.cut_layer);
  if (total_budget < black) {
    throw ConfigError("BoW needs at least one cache slot per black node");
  }
  pt.per_node_budget = static_cast<std::uint32_t>(total_budget / black);
  const auto depth = static_cast<std::uint32_t>(std::max(pt.cut_layer, 1));
  pt.delta_black =
      PolicyBound(cat, PolicyKind::kTPPC, pt.per_node_budget, depth, depth).value;
  pt.value = 2.0 * m + 2.0 * pt.delta_black;
  return pt;
}

BowSweep SweepBow(const Catalog& cat, const Topology& tree, std::uint64_t total_budget) {
  const int h = tree.height();
  BowSweep sweep;
  for (int m = 0; m <= h; ++m) {
    try {
      sweep.points.push_back(BowCompositeBound(cat, tree, total_budget, m));
    } catch (const ConfigError&) {
      // Infeasible budget at this cut.
    }
  }
  if (sweep.points.empty()) throw ConfigError("no feasible cut layer for this budget");
  sweep.best = *std::min_element(
      sweep.points.begin(), sweep.points.end(),
      [](const BowPoint& a, const BowPoint& b) { return a.value < b.value; });
  return sweep;
}

ExponentFit FitScalingExponent(const DelayCurve& curve, double trim) {
  const auto& pts = curve.points;
  if (pts.size() < 4) throw ConfigError("exponent fit needs at least 4 points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].first > 0.0) || !(pts[i].second > 0.0)) {
      throw ConfigError("exponent fit needs positive x and delay");
    }
    if (i > 0 && !(pts[i].first > pts[i - 1].first)) {
      throw ConfigError("exponent fit needs strictly increasing x");
    }
  }
  auto drop = static_cast<std::size_t>(std::lround(trim * static_cast<double>(pts.size())));
  while (drop > 0 && pts.size() - 2 * drop < 4) --drop;
  const std::size_t n = pts.size() - 2 * drop;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = drop; i < drop + n; ++i) {
    mx += std::log(pts[i].first);
    my += std::log(pts[i].second);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = drop; i < drop + n; ++i) {
    const double dx = std::log(pts[i].first) - mx;
    const double dy = std::log(pts[i].second) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  ExponentFit fit;
  fit.points_used = n;
  fit.slope = sxx == 0.0 ? 0.0 : sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

std::string ToCsvRow(const BoundReport& r) {
  return JoinCsv({PolicyName(r.policy), FormatNumber(r.alpha),
                  std::to_string(r.content_count), std::to_string(r.s), std::to_string(r.d),
                  FormatNumber(r.d_bar), FormatNumber(r.value), BoundKindName(r.kind)});
}

}  // namespace cachenet
