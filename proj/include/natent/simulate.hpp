#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "natent/dkw.hpp"
#include "natent/entropy.hpp"
#include "natent/types.hpp"
#include "natent/zipf.hpp"

namespace natent {

namespace detail {

// SplitMix64 finalizer; full-period bijection on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits of an engine draw.
// Avoids std::uniform_real_distribution so draws are identical across
// standard library implementations.
inline double uniform_unit(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Seed for an independent substream, derived from the master seed and a
/// (stream, element) pair. Distinct pairs give statistically independent
/// engines, so trials can run in any order or in parallel without sharing
/// state.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t element) {
  return detail::splitmix64(detail::splitmix64(master ^ stream * 0x9e3779b97f4a7c15ULL) ^
                            element);
}

/// Draws n iid symbols (0-based ids, id = rank - 1) from a rank
/// distribution by inverse-CDF lookup. Bit-identical output for identical
/// (dist, n, stream_seed).
inline SymbolSequence sample_sequence(const RankDistributiond& dist,
                                      std::int64_t n,
                                      std::uint64_t stream_seed) {
  if (n < 1) {
    throw std::domain_error("sample size must be at least 1");
  }
  const Index m = dist.size();
  if (m < 1) {
    throw std::domain_error("distribution is empty");
  }
  std::vector<double> cdf(m);
  double acc = 0.0;
  for (Index r = 0; r < m; ++r) {
    acc += dist.probs[r];
    cdf[r] = acc;
  }
  cdf[m - 1] = 1.0;  // guard against accumulated roundoff at the tail

  SymbolSequence seq;
  seq.alphabet_size = m;
  seq.symbols.resize(n);
  std::mt19937_64 engine(stream_seed);
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = detail::uniform_unit(engine);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = static_cast<Index>(it - cdf.begin());
    seq.symbols[i] = static_cast<int>(std::min(idx, m - 1));
  }
  return seq;
}

/// Configuration of one ensemble experiment: which model, which gap mode,
/// which sample counts to probe and how many independent trials per count.
struct SimConfig {
  Index alphabet_size{};
  double confidence{};
  EstimationMode mode{};
  int ngram_order{1};
  LogBase base{LogBase::two};
  std::vector<std::int64_t> sample_grid;
  int ensemble{200};
  std::uint64_t seed{0};
  // Worker threads; any value yields bit-identical results because every
  // (grid point, trial) pair owns its own seeded substream and reduction
  // happens in fixed index order.
  int threads{1};
};

struct MsePoint {
  std::int64_t samples{};
  double mse{};
  double mean_estimate{};
};

/// Ensemble-averaged squared entropy-estimation error per grid point,
/// together with the model entropy and the sample-count estimate for the
/// same configuration.
struct MseCurve {
  SimConfig config;
  double true_entropy{};
  std::vector<MsePoint> points;
  std::int64_t n0_marker{};
};

/// Log-spaced integer grid from lo to hi inclusive, deduplicated after
/// rounding, strictly increasing.
inline std::vector<std::int64_t> log_spaced_grid(std::int64_t lo,
                                                 std::int64_t hi, int points) {
  if (lo < 1 || hi < lo || points < 1) {
    throw std::domain_error("grid requires 1 <= lo <= hi and points >= 1");
  }
  std::vector<std::int64_t> grid;
  grid.reserve(points);
  const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
  for (int k = 0; k < points; ++k) {
    const double t = points == 1 ? 0.0
                                 : static_cast<double>(k) /
                                       static_cast<double>(points - 1);
    const auto value = static_cast<std::int64_t>(
        std::llround(static_cast<double>(lo) * std::pow(ratio, t)));
    if (grid.empty() || value > grid.back()) {
      grid.push_back(value);
    }
  }
  return grid;
}

/// Linearly spaced integer grid from lo to hi inclusive, deduplicated.
inline std::vector<std::int64_t> linear_spaced_grid(std::int64_t lo,
                                                    std::int64_t hi,
                                                    int points) {
  if (lo < 1 || hi < lo || points < 1) {
    throw std::domain_error("grid requires 1 <= lo <= hi and points >= 1");
  }
  std::vector<std::int64_t> grid;
  grid.reserve(points);
  for (int k = 0; k < points; ++k) {
    const double t = points == 1 ? 0.0
                                 : static_cast<double>(k) /
                                       static_cast<double>(points - 1);
    const auto value = static_cast<std::int64_t>(
        std::llround(static_cast<double>(lo) +
                     t * static_cast<double>(hi - lo)));
    if (grid.empty() || value > grid.back()) {
      grid.push_back(value);
    }
  }
  return grid;
}

namespace detail {

inline void validate(const SimConfig& config) {
  if (config.sample_grid.empty()) {
    throw std::domain_error("sample grid must be nonempty");
  }
  for (std::size_t i = 0; i < config.sample_grid.size(); ++i) {
    if (config.sample_grid[i] < config.ngram_order) {
      throw std::domain_error("grid point " +
                              std::to_string(config.sample_grid[i]) +
                              " is below the n-gram order");
    }
    if (i > 0 && config.sample_grid[i] <= config.sample_grid[i - 1]) {
      throw std::domain_error("sample grid must be strictly increasing");
    }
  }
  if (config.ensemble < 1) {
    throw std::domain_error("ensemble size must be at least 1");
  }
  if (config.ngram_order < 1) {
    throw std::domain_error("n-gram order must be at least 1");
  }
}

// Runs fn(k) for k in [0, total) across the requested number of worker
// threads. Each k writes only its own output slot, so scheduling cannot
// affect results.
template <typename Fn>
void parallel_for(std::int64_t total, int threads, const Fn& fn) {
  const int width = std::max(1, threads);
  if (width == 1 || total <= 1) {
    for (std::int64_t k = 0; k < total; ++k) {
      fn(k);
    }
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(width);
  for (int w = 0; w < width; ++w) {
    workers.emplace_back([&] {
      for (std::int64_t k = next.fetch_add(1); k < total;
           k = next.fetch_add(1)) {
        fn(k);
      }
    });
  }
  for (auto& worker : workers) {
    worker.join();
  }
}

}  // namespace detail

/// Ensemble MSE of plug-in entropy estimation versus sample count.
///
/// For each grid point N, draws `ensemble` independent length-N sequences
/// from the rank model, estimates the N-gram entropy of each, and averages
/// the squared error against the model entropy. Under iid draws the
/// conditional entropy of any order equals the single-symbol entropy, so
/// the model entropy is the order-1 value for every ngram_order.
inline MseCurve mse_curve(const SimConfig& config) {
  detail::validate(config);
  const auto params = derive_params(config.alphabet_size);
  const auto dist = build_distribution(params);

  MseCurve curve;
  curve.config = config;
  curve.true_entropy = shannon_entropy(dist.probs, config.base);
  curve.n0_marker =
      estimate_samples(config.alphabet_size, config.confidence, config.mode)
          .observation_count;

  const auto grid_size = static_cast<std::int64_t>(config.sample_grid.size());
  const auto ensemble = static_cast<std::int64_t>(config.ensemble);
  std::vector<double> estimates(grid_size * ensemble);
  detail::parallel_for(grid_size * ensemble, config.threads, [&](std::int64_t k) {
    const std::int64_t gi = k / ensemble;
    const std::int64_t ti = k % ensemble;
    const auto seq = sample_sequence(
        dist, config.sample_grid[gi],
        substream_seed(config.seed, static_cast<std::uint64_t>(gi),
                       static_cast<std::uint64_t>(ti)));
    estimates[k] = plugin_entropy(seq, config.ngram_order, config.base);
  });

  curve.points.reserve(grid_size);
  for (std::int64_t gi = 0; gi < grid_size; ++gi) {
    double mean = 0.0;
    double mse = 0.0;
    for (std::int64_t ti = 0; ti < ensemble; ++ti) {
      const double estimate = estimates[gi * ensemble + ti];
      const double error = estimate - curve.true_entropy;
      mean += estimate;
      mse += error * error;
    }
    MsePoint point;
    point.samples = config.sample_grid[gi];
    point.mse = mse / static_cast<double>(ensemble);
    point.mean_estimate = mean / static_cast<double>(ensemble);
    curve.points.push_back(point);
  }
  return curve;
}

/// Fraction of seeded trials whose empirical CDF strays farther than
/// epsilon from the model CDF somewhere. The DKW inequality bounds the
/// expected rate by 2 exp(-2 n epsilon^2).
inline double dkw_violation_rate(const RankDistributiond& dist, std::int64_t n,
                                 double epsilon, int trials,
                                 std::uint64_t seed) {
  if (n < 1) {
    throw std::domain_error("sample size must be at least 1");
  }
  if (!(epsilon > 0.0)) {
    throw std::domain_error("deviation bound must be positive");
  }
  if (trials < 1) {
    throw std::domain_error("trial count must be at least 1");
  }
  int violations = 0;
  for (int t = 0; t < trials; ++t) {
    const auto seq = sample_sequence(
        dist, n, substream_seed(seed, 0, static_cast<std::uint64_t>(t)));
    if (empirical_cdf_deviation(seq, dist) > epsilon) {
      ++violations;
    }
  }
  return static_cast<double>(violations) / static_cast<double>(trials);
}

}  // namespace natent
