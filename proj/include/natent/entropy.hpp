#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "natent/types.hpp"

namespace natent {

/// Logarithm base used when reporting entropy (bits, nats or hartleys).
enum class LogBase { two, e, ten };

template <typename Scalar>
Scalar log_in_base(Scalar x, LogBase base) {
  switch (base) {
    case LogBase::two:
      return std::log2(x);
    case LogBase::ten:
      return std::log10(x);
    case LogBase::e:
    default:
      return std::log(x);
  }
}

/// A finite stream of symbols drawn from an alphabet of the declared size.
/// Symbol ids are 0-based and must all be < alphabet_size.
struct SymbolSequence {
  Eigen::ArrayXi symbols;
  Index alphabet_size{};

  Index size() const { return symbols.size(); }
};

/// Symbol frequencies of a sequence. Symbols never observed carry
/// probability zero; they still occupy a slot of the declared alphabet.
struct EmpiricalDistribution {
  ArrayXd probs;
  ArrayX<std::int64_t> counts;
  std::int64_t total{};
};

/// Counts of all contiguous length-N windows of a sequence (stride 1).
/// joint_counts keys are the N-symbol windows; block_counts keys are their
/// (N-1)-symbol prefixes, so for every block b,
///   sum over x of joint_counts[(b, x)] == block_counts[b].
/// For N = 1 the single block is the empty key.
struct NgramTable {
  int order{};
  std::map<std::vector<int>, std::int64_t> block_counts;
  std::map<std::vector<int>, std::int64_t> joint_counts;
  std::int64_t total_ngrams{};
};

/// -sum p_i log(p_i) of a probability vector, with 0 log 0 taken as 0.
/// The vector must be nonnegative and sum to one within 1e-9.
template <typename Derived>
typename Derived::Scalar shannon_entropy(const Eigen::ArrayBase<Derived>& probs,
                                         LogBase base = LogBase::two) {
  using Scalar = typename Derived::Scalar;
  Scalar sum = 0;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs[i] < Scalar{0}) {
      throw std::domain_error("probability vector has a negative entry");
    }
    sum += probs[i];
  }
  if (std::abs(sum - Scalar{1}) > Scalar{1e-9}) {
    throw std::domain_error("probability vector does not sum to 1");
  }
  Scalar entropy = 0;
  for (Index i = 0; i < probs.size(); ++i) {
    const Scalar p = probs[i];
    if (p > Scalar{0}) {
      entropy -= p * log_in_base(p, base);
    }
  }
  return entropy;
}

/// Relative frequencies of a nonempty sequence over its declared alphabet.
inline EmpiricalDistribution empirical_distribution(
    const SymbolSequence& seq) {
  if (seq.size() == 0) {
    throw std::domain_error("cannot estimate probabilities from an empty "
                            "sequence");
  }
  EmpiricalDistribution dist;
  dist.counts = ArrayX<std::int64_t>::Zero(seq.alphabet_size);
  for (Index i = 0; i < seq.size(); ++i) {
    const int s = seq.symbols[i];
    if (s < 0 || s >= seq.alphabet_size) {
      throw std::domain_error("symbol " + std::to_string(s) +
                              " outside alphabet of size " +
                              std::to_string(seq.alphabet_size));
    }
    ++dist.counts[s];
  }
  dist.total = seq.size();
  dist.probs = dist.counts.cast<double>() / static_cast<double>(dist.total);
  return dist;
}

/// Counts every contiguous N-gram of the sequence. Only windows that fit
/// entirely inside the sequence are counted, so total_ngrams = len - N + 1.
inline NgramTable build_ngram_table(const SymbolSequence& seq, int order) {
  if (order < 1) {
    throw std::domain_error("n-gram order must be at least 1");
  }
  if (seq.size() < static_cast<Index>(order)) {
    throw std::domain_error("sequence of length " +
                            std::to_string(seq.size()) +
                            " is shorter than n-gram order " +
                            std::to_string(order));
  }
  NgramTable table;
  table.order = order;
  const Index windows = seq.size() - order + 1;
  std::vector<int> joint(order);
  for (Index i = 0; i < windows; ++i) {
    for (int j = 0; j < order; ++j) {
      joint[j] = seq.symbols[i + j];
    }
    ++table.joint_counts[joint];
    ++table.block_counts[std::vector<int>(joint.begin(), joint.end() - 1)];
  }
  table.total_ngrams = windows;
  return table;
}

/// N-gram entropy -sum p(b,x) log p(x|b) over the table's windows, where
/// p(x|b) = joint_count(b,x) / block_count(b). For order 1 this is the
/// plug-in entropy of the symbol frequencies.
template <typename Scalar = double>
Scalar ngram_entropy(const NgramTable& table, LogBase base = LogBase::two) {
  if (table.total_ngrams < 1) {
    throw std::domain_error("n-gram table is empty");
  }
  const Scalar total = static_cast<Scalar>(table.total_ngrams);
  Scalar entropy = 0;
  for (const auto& [joint, count] : table.joint_counts) {
    const std::vector<int> block(joint.begin(), joint.end() - 1);
    const Scalar conditional =
        static_cast<Scalar>(count) /
        static_cast<Scalar>(table.block_counts.at(block));
    entropy -= static_cast<Scalar>(count) / total *
               log_in_base(conditional, base);
  }
  return entropy;
}

/// Plug-in N-gram entropy of a sequence: count the windows, then apply the
/// entropy formula to the raw frequencies. No smoothing, no bias correction.
template <typename Scalar = double>
Scalar plugin_entropy(const SymbolSequence& seq, int order,
                      LogBase base = LogBase::two) {
  return ngram_entropy<Scalar>(build_ngram_table(seq, order), base);
}

}  // namespace natent
