#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "natent/entropy.hpp"
#include "natent/types.hpp"
#include "natent/zipf.hpp"

namespace natent {

namespace detail {

template <typename Scalar>
void check_confidence(Scalar confidence) {
  if (!(confidence > Scalar{0}) || !(confidence < Scalar{1})) {
    throw std::domain_error("confidence must lie in (0, 1)");
  }
  // ln(2/(1-zeta)) diverges as zeta -> 1; reject rather than return
  // astronomically large counts.
  if (confidence >= Scalar{1} - Scalar{1e-12}) {
    throw std::domain_error("confidence too close to 1 (must be below "
                            "1 - 1e-12)");
  }
}

}  // namespace detail

/// Pre-ceiling sample count from the DKW inequality with the Massart
/// constant: (1 / (2 eps^2)) ln(2 / (1 - zeta)). With this many iid draws
/// the empirical CDF stays within eps of the true CDF everywhere, with
/// probability at least zeta.
template <typename Scalar>
Scalar dkw_sample_count_real(Scalar epsilon, Scalar confidence) {
  if (!(epsilon > Scalar{0})) {
    throw std::domain_error("deviation bound must be positive");
  }
  detail::check_confidence(confidence);
  return std::log(2 / (1 - confidence)) / (2 * epsilon * epsilon);
}

/// Smallest integer sample count satisfying the DKW bound.
inline std::int64_t dkw_sample_count(double epsilon, double confidence) {
  return detail::checked_ceil(dkw_sample_count_real(epsilon, confidence),
                              "dkw_sample_count");
}

/// Discrimination radius for a probability gap: a band of half-width
/// delta0/4 around each of two probabilities delta0 apart keeps the bands
/// disjoint, so the two ranks remain distinguishable.
template <typename Scalar>
Scalar epsilon_from_gap(Scalar delta0) {
  if (!(delta0 > Scalar{0})) {
    throw std::domain_error("probability gap must be positive");
  }
  return delta0 / 4;
}

/// Pre-ceiling event count (8 / delta0^2) ln(2 / (1 - zeta)); equals the
/// DKW count at radius delta0/4.
template <typename Scalar>
Scalar event_count_real(Scalar delta0, Scalar confidence) {
  if (!(delta0 < Scalar{1})) {
    throw std::domain_error("probability gap must be below 1");
  }
  return dkw_sample_count_real(epsilon_from_gap(delta0), confidence);
}

/// Smallest integer event count resolving a gap of delta0 at the given
/// confidence. Shares the arithmetic of dkw_sample_count exactly, so the
/// two agree for every (delta0/4, zeta) pair.
inline std::int64_t event_count_bound(double delta0, double confidence) {
  return detail::checked_ceil(event_count_real(delta0, confidence),
                              "event_count_bound");
}

/// Total observations needed so the rarest tracked symbol (probability p0)
/// is expected to occur event_count times: ceil(n0 / p0).
inline std::int64_t observation_count(std::int64_t event_count, double p0) {
  if (event_count < 1) {
    throw std::domain_error("event count must be at least 1");
  }
  if (!(p0 > 0.0) || !(p0 < 1.0)) {
    throw std::domain_error("reference probability must lie in (0, 1)");
  }
  return detail::checked_ceil(static_cast<double>(event_count) / p0,
                              "observation_count");
}

/// Which probability gap drives the estimate.
struct EstimationMode {
  enum class Kind { full, coarse, top_quantile };

  Kind kind{Kind::full};
  Index effective_size{0};  // coarse only
  double fraction{0.0};     // top_quantile only

  static EstimationMode full() { return {}; }

  static EstimationMode coarse(Index effective_size) {
    EstimationMode mode;
    mode.kind = Kind::coarse;
    mode.effective_size = effective_size;
    return mode;
  }

  static EstimationMode top_quantile(double fraction) {
    EstimationMode mode;
    mode.kind = Kind::top_quantile;
    mode.fraction = fraction;
    return mode;
  }
};

/// Everything the estimator derives on the way from an alphabet size and
/// confidence level to a total observation count. Integer counts are the
/// ceilings of the adjacent *_real fields.
template <typename Scalar = double>
struct SampleEstimate {
  Index alphabet_size{};
  Scalar confidence{};
  EstimationMode mode{};
  ZipfParams<Scalar> params{};
  Scalar delta0{};                  // gap between the two tracked ranks
  Scalar epsilon{};                 // delta0 / 4
  Scalar event_count_real{};        // pre-ceiling n0
  std::int64_t event_count{};       // n0
  Scalar p0{};                      // probability of the rarest tracked rank
  Scalar observation_count_real{};  // pre-ceiling N0
  std::int64_t observation_count{}; // N0
};

using SampleEstimated = SampleEstimate<double>;

/// Minimum samples needed to pin down the entropy of a Zipf-ranked alphabet
/// of size M at the given confidence: model the rank probabilities, locate
/// the gap the mode asks for, convert it to an event count via the DKW
/// inequality, and scale by the rarest tracked probability.
template <typename Scalar = double>
SampleEstimate<Scalar> estimate_samples(
    Index alphabet_size, Scalar confidence,
    const EstimationMode& mode = EstimationMode::full()) {
  detail::check_confidence(confidence);
  const ZipfParams<Scalar> params = derive_params<Scalar>(alphabet_size);
  const RankDistribution<Scalar> dist = build_distribution(params);

  GapResult<Scalar> gap;
  switch (mode.kind) {
    case EstimationMode::Kind::coarse:
      gap = coarse_gap(dist, mode.effective_size);
      break;
    case EstimationMode::Kind::top_quantile:
      gap = coarse_gap(dist, top_quantile_rank(alphabet_size, mode.fraction));
      break;
    case EstimationMode::Kind::full:
    default:
      gap = min_gap(dist);
      break;
  }

  SampleEstimate<Scalar> est;
  est.alphabet_size = alphabet_size;
  est.confidence = confidence;
  est.mode = mode;
  est.params = params;
  est.delta0 = gap.delta0;
  est.epsilon = epsilon_from_gap(gap.delta0);
  est.event_count_real = event_count_real(gap.delta0, confidence);
  // Ceiling taken at Scalar precision so wider instantiations do not lose
  // the integer boundary in a narrowing cast.
  est.event_count = detail::checked_ceil(
      static_cast<double>(std::ceil(est.event_count_real)), "event count");
  est.p0 = gap.p0;
  est.observation_count_real =
      static_cast<Scalar>(est.event_count) / gap.p0;
  est.observation_count =
      observation_count(est.event_count, static_cast<double>(gap.p0));
  return est;
}

/// Largest deviation between the empirical CDF of a sample and the model
/// CDF, evaluated at the rank atoms. For a discrete distribution the
/// supremum over the reals is attained at the atoms, so this is the exact
/// Kolmogorov-Smirnov statistic against the model.
template <typename Scalar>
Scalar empirical_cdf_deviation(const SymbolSequence& sample,
                               const RankDistribution<Scalar>& dist) {
  if (sample.size() == 0) {
    throw std::domain_error("sample must be nonempty");
  }
  const Index m = dist.size();
  ArrayX<std::int64_t> counts = ArrayX<std::int64_t>::Zero(m);
  for (Index i = 0; i < sample.size(); ++i) {
    const int s = sample.symbols[i];
    if (s < 0 || s >= m) {
      throw data_error("symbol " + std::to_string(s) +
                       " outside alphabet of size " + std::to_string(m));
    }
    ++counts[s];
  }
  const Scalar n = static_cast<Scalar>(sample.size());
  Scalar model_cdf = 0;
  Scalar empirical_cdf = 0;
  Scalar sup = 0;
  for (Index r = 0; r < m; ++r) {
    model_cdf += dist.probs[r];
    empirical_cdf += static_cast<Scalar>(counts[r]) / n;
    sup = std::max(sup, std::abs(empirical_cdf - model_cdf));
  }
  return sup;
}

}  // namespace natent
