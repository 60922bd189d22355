#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "natent/types.hpp"

namespace natent {

/// Constants of the normalized Zipf-Mandelbrot-Li rank law for an alphabet
/// of a given size. All five scalars follow from the alphabet size alone;
/// none are fitted to data.
///
/// The law assigns rank r (1-based, rank 1 most frequent) the probability
///   p(r) = gamma_prime / (r + beta)^alpha
/// with gamma_prime chosen so the probabilities over ranks 1..M sum to one.
template <typename Scalar = double>
struct ZipfParams {
  Index alphabet_size{};  // M
  Scalar alpha{};         // exponent, log(M+1)/log(M), > 1
  Scalar beta{};          // rank shift, M/(M+1), in (0,1)
  Scalar gamma{};         // unnormalized scale, M^(alpha-1)/(M-1)^alpha
  Scalar kappa{};         // normalizing sum over ranks 1..M of gamma/(r+beta)^alpha
  Scalar gamma_prime{};   // gamma/kappa, the normalized scale
};

using ZipfParamsd = ZipfParams<double>;

/// The rank law materialized over every rank 1..M. probs[r-1] holds the
/// probability of rank r; coefficients are strictly decreasing and sum to
/// one up to roundoff.
template <typename Scalar = double>
struct RankDistribution {
  ZipfParams<Scalar> params{};
  ArrayX<Scalar> probs;

  Index size() const { return probs.size(); }
};

using RankDistributiond = RankDistribution<double>;

/// Smallest consecutive probability gap together with where it sits.
/// delta0 = p(rank_lo - 1) - p(rank_lo); p0 is p(rank_lo), the smallest
/// probability still tracked by the downstream sample-count estimate.
template <typename Scalar = double>
struct GapResult {
  Scalar delta0{};
  Index rank_lo{};
  Scalar p0{};
};

using GapResultd = GapResult<double>;

/// Derives the rank-law constants for an alphabet of size M >= 2.
///
/// M = 1 is rejected: the exponent log(M+1)/log(M) is undefined there.
template <typename Scalar = double>
ZipfParams<Scalar> derive_params(Index alphabet_size) {
  if (alphabet_size < 2) {
    throw std::domain_error("alphabet size must be at least 2");
  }
  const Scalar m = static_cast<Scalar>(alphabet_size);
  ZipfParams<Scalar> params;
  params.alphabet_size = alphabet_size;
  params.alpha = std::log(m + 1) / std::log(m);
  params.beta = m / (m + 1);
  params.gamma = std::pow(m, params.alpha - 1) / std::pow(m - 1, params.alpha);
  Scalar sum = 0;
  for (Index r = alphabet_size; r >= 1; --r) {
    sum += params.gamma /
           std::pow(static_cast<Scalar>(r) + params.beta, params.alpha);
  }
  params.kappa = sum;
  params.gamma_prime = params.gamma / params.kappa;
  return params;
}

/// p(r) = gamma_prime / (r + beta)^alpha for a 1-based rank in [1, M].
template <typename Scalar>
Scalar rank_probability(const ZipfParams<Scalar>& params, Index rank) {
  if (rank < 1 || rank > params.alphabet_size) {
    throw std::domain_error("rank " + std::to_string(rank) +
                            " outside [1, " +
                            std::to_string(params.alphabet_size) + "]");
  }
  return params.gamma_prime /
         std::pow(static_cast<Scalar>(rank) + params.beta, params.alpha);
}

/// Evaluates the rank law at every rank 1..M.
template <typename Scalar>
RankDistribution<Scalar> build_distribution(const ZipfParams<Scalar>& params) {
  RankDistribution<Scalar> dist;
  dist.params = params;
  dist.probs.resize(params.alphabet_size);
  for (Index r = 1; r <= params.alphabet_size; ++r) {
    dist.probs[r - 1] = rank_probability(params, r);
  }
  return dist;
}

/// The word-probability normalizer lambda = (M+1)^2 / M from the
/// random-typing derivation of the rank law.
template <typename Scalar = double>
Scalar li_lambda(Index alphabet_size) {
  if (alphabet_size < 1) {
    throw std::domain_error("alphabet size must be at least 1");
  }
  const Scalar m = static_cast<Scalar>(alphabet_size);
  return (m + 1) * (m + 1) / m;
}

/// Probability 1 / (M (M+1)^L) of any specific random word of length L
/// over an alphabet of M symbols plus a separator. Summed over all M^L
/// words of each length this forms a geometric series converging to one.
template <typename Scalar = double>
Scalar word_length_probability(Index alphabet_size, Index word_length) {
  if (alphabet_size < 1) {
    throw std::domain_error("alphabet size must be at least 1");
  }
  if (word_length < 1) {
    throw std::domain_error("word length must be at least 1");
  }
  const Scalar m = static_cast<Scalar>(alphabet_size);
  return 1 / (m * std::pow(m + 1, static_cast<Scalar>(word_length)));
}

/// Smallest gap between consecutive rank probabilities. Under the rank law
/// the consecutive gaps shrink monotonically with rank, so the minimum sits
/// between the two rarest symbols: delta0 = p(M-1) - p(M).
template <typename Scalar>
GapResult<Scalar> min_gap(const RankDistribution<Scalar>& dist) {
  const Index m = dist.size();
  if (m < 2) {
    throw std::domain_error("gap requires an alphabet of at least 2 symbols");
  }
  GapResult<Scalar> gap;
  gap.rank_lo = m;
  gap.delta0 = dist.probs[m - 2] - dist.probs[m - 1];
  gap.p0 = dist.probs[m - 1];
  return gap;
}

/// Gap between ranks Mc-1 and Mc of the full-alphabet law. The ranks below
/// Mc are dropped from consideration but the probabilities themselves stay
/// those of the full distribution; nothing is renormalized.
template <typename Scalar>
GapResult<Scalar> coarse_gap(const RankDistribution<Scalar>& dist,
                             Index effective_size) {
  if (effective_size < 2 || effective_size > dist.size()) {
    throw std::domain_error("effective alphabet size " +
                            std::to_string(effective_size) +
                            " outside [2, " + std::to_string(dist.size()) +
                            "]");
  }
  GapResult<Scalar> gap;
  gap.rank_lo = effective_size;
  gap.delta0 = dist.probs[effective_size - 2] - dist.probs[effective_size - 1];
  gap.p0 = dist.probs[effective_size - 1];
  return gap;
}

/// Rank covering the top fraction of the alphabet: ceil(q * M), clamped to
/// [2, M] so a consecutive gap always exists above it.
inline Index top_quantile_rank(Index alphabet_size, double fraction) {
  if (alphabet_size < 2) {
    throw std::domain_error("alphabet size must be at least 2");
  }
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::domain_error("fraction must lie in (0, 1]");
  }
  const auto rank = static_cast<Index>(
      std::ceil(fraction * static_cast<double>(alphabet_size)));
  return std::min(std::max(rank, Index{2}), alphabet_size);
}

}  // namespace natent
