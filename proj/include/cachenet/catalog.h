#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cachenet/errors.h"
#include "cachenet/random.h"

namespace cachenet {

// Content ids are 0-based popularity ranks: id 0 is the most popular content
// (rank 1 in Zipf notation).
using ContentId = std::uint32_t;

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// sum_{i=1..count} i^-exponent
double ZipfHarmonic(std::size_t count, double exponent);

// Inverse-CDF sampler over a fixed discrete distribution.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> weights);
  ContentId operator()(Rng& rng) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

// Zipf-like request popularity p_i = K / i^alpha over |C| contents.
class Catalog {
 public:
  Catalog(std::size_t content_count, double alpha);

  std::size_t size() const { return p_.size(); }
  double alpha() const { return alpha_; }
  double normalizer() const { return k_; }  // K
  std::span<const double> popularity() const { return p_; }
  double p(ContentId id) const { return p_[id]; }
  // Probability mass of ids >= first (the "tail" beyond rank `first`).
  double tail(std::size_t first) const {
    return first >= tail_.size() ? 0.0 : tail_[first];
  }
  const DiscreteSampler& sampler() const { return sampler_; }

 private:
  double alpha_;
  double k_;
  std::vector<double> p_;
  std::vector<double> tail_;
  DiscreteSampler sampler_;
};

// Draws a content id with probability p_i.
inline ContentId SampleContent(const Catalog& c, Rng& rng) {
  return c.sampler()(rng);
}

enum class PolicyKind { kURP, kPPP, kTPP, kTPPC, kLBND };

std::string PolicyName(PolicyKind kind);
PolicyKind ParsePolicy(const std::string& name);  // throws ConfigError

// Rounding of s * d_bar when computing the TPP-C cut index. kFloorDistance
// rounds the distance first: s * floor(d_bar).
enum class CutRounding { kCeil, kFloor, kNearest, kFloorDistance };
CutRounding ParseCutRounding(const std::string& name);  // throws ConfigError

struct PlacementPolicy {
  PolicyKind kind = PolicyKind::kURP;
  double s = 0.0;      // per-node cache size (TPP-C only)
  double d_bar = 0.0;  // average routing distance (TPP-C only)
  CutRounding rounding = CutRounding::kCeil;
};

// Per-content caching probabilities q used to fill every cache.
struct PlacementDistribution {
  PolicyKind policy = PolicyKind::kURP;
  std::vector<double> q;
  double beta = 0.0;           // tilt exponent of q_i ~ i^-beta
  std::size_t cut_index = 0;   // q_i = 0 for ranks > cut_index
  double k_prime = 0.0;        // TPP normalizer: q_i = K' / i^(alpha/2)
  double m_norm = 0.0;         // TPP-C normalizer M over the first cut_index ranks
};

// q_i ~ i^-beta for ranks 1..cut_index, zero beyond.
PlacementDistribution TiltedDistribution(std::size_t content_count, double beta,
                                         std::size_t cut_index);

std::size_t TppcCutIndex(std::size_t content_count, double s, double d_bar,
                         CutRounding rounding = CutRounding::kCeil);

// URP: uniform. PPP: q = p. TPP: beta = alpha/2. TPP-C: beta = alpha/2 cut at
// min{round(s * d_bar), |C|}. LBND has no realizable distribution.
PlacementDistribution MakePlacementDistribution(const Catalog& c,
                                                const PlacementPolicy& policy);

// sum_i p_i / q_i together with its Cauchy-Schwarz floor (sum_i sqrt(p_i))^2.
struct CsBound {
  double value = 0.0;
  double floor = 0.0;
};
CsBound CauchySchwarzBound(const Catalog& c, std::span<const double> q);

}  // namespace cachenet
