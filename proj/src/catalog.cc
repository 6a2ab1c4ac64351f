#include "cachenet/catalog.h"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace cachenet {

double ZipfHarmonic(std::size_t count, double exponent) {
  CompensatedSum sum;
  // Smallest terms first.
  for (std::size_t i = count; i >= 1; --i) {
    sum.add(std::pow(static_cast<double>(i), -exponent));
  }
  return sum.value();
}

DiscreteSampler::DiscreteSampler(std::span<const double> weights) {
  if (weights.empty()) throw ConfigError("sampler needs at least one weight");
  cdf_.resize(weights.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw ConfigError("sampler weights must be nonnegative");
    acc.add(weights[i]);
    cdf_[i] = acc.value();
  }
  const double total = acc.value();
  if (!(total > 0.0)) throw ConfigError("sampler weights sum to zero");
  for (double& c : cdf_) c /= total;
}

ContentId DiscreteSampler::operator()(Rng& rng) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), UniformUnit(rng));
  // Only reachable through rounding; map to the last positive-weight entry.
  if (it == cdf_.end()) it = std::lower_bound(cdf_.begin(), cdf_.end(), cdf_.back());
  return static_cast<ContentId>(it - cdf_.begin());
}

namespace {

std::vector<double> ZipfPopularity(std::size_t count, double alpha, double* k) {
  if (count == 0) throw ConfigError("catalog needs at least one content");
  if (!(alpha > 0.0)) throw ConfigError("Zipf exponent alpha must be positive");
  *k = 1.0 / ZipfHarmonic(count, alpha);
  std::vector<double> p(count);
  for (std::size_t i = 0; i < count; ++i) {
    p[i] = *k * std::pow(static_cast<double>(i + 1), -alpha);
  }
  return p;
}

}  // namespace

Catalog::Catalog(std::size_t content_count, double alpha)
    : alpha_(alpha),
      k_(0.0),
      p_(ZipfPopularity(content_count, alpha, &k_)),
      sampler_(p_) {
  tail_.assign(content_count, 0.0);
  CompensatedSum acc;
  for (std::size_t i = content_count; i-- > 0;) {
    acc.add(p_[i]);
    tail_[i] = acc.value();
  }
}

std::string PolicyName(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kURP: return "URP";
    case PolicyKind::kPPP: return "PPP";
    case PolicyKind::kTPP: return "TPP";
    case PolicyKind::kTPPC: return "TPPC";
    case PolicyKind::kLBND: return "LBND";
  }
  return "?";
}

PolicyKind ParsePolicy(const std::string& name) {
  std::string upper;
  for (char ch : name) {
    if (ch != '-' && ch != '_') upper.push_back(static_cast<char>(std::toupper(ch)));
  }
  if (upper == "URP") return PolicyKind::kURP;
  if (upper == "PPP") return PolicyKind::kPPP;
  if (upper == "TPP") return PolicyKind::kTPP;
  if (upper == "TPPC") return PolicyKind::kTPPC;
  if (upper == "LBND") return PolicyKind::kLBND;
  throw ConfigError("unknown placement policy '" + name + "'");
}

PlacementDistribution TiltedDistribution(std::size_t content_count, double beta,
                                         std::size_t cut_index) {
  if (content_count == 0) throw ConfigError("empty catalog");
  if (cut_index < 1 || cut_index > content_count) {
    throw ConfigError("cut index must lie in [1, |C|]");
  }
  if (beta < 0.0) throw ConfigError("tilt exponent must be nonnegative");
  PlacementDistribution dist;
  dist.beta = beta;
  dist.cut_index = cut_index;
  dist.q.assign(content_count, 0.0);
  const double norm = 1.0 / ZipfHarmonic(cut_index, beta);
  for (std::size_t i = 0; i < cut_index; ++i) {
    dist.q[i] = norm * std::pow(static_cast<double>(i + 1), -beta);
  }
  dist.m_norm = norm;
  dist.k_prime = norm;
  return dist;
}

std::size_t TppcCutIndex(std::size_t content_count, double s, double d_bar,
                         CutRounding rounding) {
  if (!(s >= 1.0)) throw ConfigError("TPP-C needs s >= 1");
  if (!(d_bar >= 1.0)) throw ConfigError("TPP-C needs d_bar >= 1");
  const double raw = s * d_bar;
  double rounded = 0.0;
  switch (rounding) {
    // Guard against s*d_bar landing a hair above an integer.
    case CutRounding::kCeil: rounded = std::ceil(raw - 1e-9); break;
    case CutRounding::kFloor: rounded = std::floor(raw + 1e-9); break;
    case CutRounding::kNearest: rounded = std::round(raw); break;
    case CutRounding::kFloorDistance: rounded = s * std::floor(d_bar + 1e-9); break;
  }
  rounded = std::max(rounded, 1.0);
  return std::min(content_count, static_cast<std::size_t>(rounded));
}

CutRounding ParseCutRounding(const std::string& name) {
  if (name == "ceil") return CutRounding::kCeil;
  if (name == "floor") return CutRounding::kFloor;
  if (name == "nearest") return CutRounding::kNearest;
  if (name == "floor_distance") return CutRounding::kFloorDistance;
  throw ConfigError("unknown cut rounding '" + name +
                    "' (expected ceil, floor, nearest or floor_distance)");
}

PlacementDistribution MakePlacementDistribution(const Catalog& c,
                                                const PlacementPolicy& policy) {
  const std::size_t n = c.size();
  PlacementDistribution dist;
  switch (policy.kind) {
    case PolicyKind::kURP:
      dist = TiltedDistribution(n, 0.0, n);
      break;
    case PolicyKind::kPPP:
      dist.q.assign(c.popularity().begin(), c.popularity().end());
      dist.beta = c.alpha();
      dist.cut_index = n;
      dist.k_prime = c.normalizer();
      dist.m_norm = c.normalizer();
      break;
    case PolicyKind::kTPP:
      dist = TiltedDistribution(n, c.alpha() / 2.0, n);
      break;
    case PolicyKind::kTPPC:
      dist = TiltedDistribution(
          n, c.alpha() / 2.0, TppcCutIndex(n, policy.s, policy.d_bar, policy.rounding));
      dist.k_prime = 1.0 / ZipfHarmonic(n, c.alpha() / 2.0);
      break;
    case PolicyKind::kLBND:
      throw ConfigError("LBND is an analytical oracle and has no placement distribution");
  }
  dist.policy = policy.kind;
  return dist;
}

CsBound CauchySchwarzBound(const Catalog& c, std::span<const double> q) {
  if (q.size() != c.size()) throw ConfigError("q length differs from catalog size");
  CompensatedSum value;
  CompensatedSum roots;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double p = c.p(static_cast<ContentId>(i));
    if (p > 0.0 && !(q[i] > 0.0)) {
      throw ConfigError("q_i must be positive wherever p_i is (index " +
                        std::to_string(i) + ")");
    }
    value.add(p / q[i]);
    roots.add(std::sqrt(p));
  }
  return {value.value(), roots.value() * roots.value()};
}

}  // namespace cachenet
