#pragma once

// Seeded generators and brute-force oracles shared by the unit and acceptance
// suites. Oracles here deliberately avoid the library's aggregation paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crg/schema.hpp"
#include "crg/text.hpp"

namespace crg::testing {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline std::vector<std::string> label_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < n; ++j) out.push_back("label" + std::to_string(j));
  return out;
}

/// Random 0/1 matrix with ids "s0".."s{n-1}" inserted in shuffled order.
inline LabelMatrix random_matrix(std::mt19937_64& rng, int level, const std::vector<std::string>& labels,
                                 std::size_t n_samples, double p_one = 0.3) {
  std::vector<std::size_t> order(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution bit(p_one);
  LabelMatrix m(level, labels);
  for (auto i : order) {
    std::vector<std::uint8_t> row(labels.size());
    for (auto& v : row) v = bit(rng) ? 1 : 0;
    m.add_row("s" + std::to_string(i), row);
  }
  return m;
}

/// Cell-by-cell confusion count, joining on ids and label names directly.
inline ConfusionCounts brute_force_counts(const LabelMatrix& pred, const LabelMatrix& ref) {
  ConfusionCounts c;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    const auto ref_row = ref.assignment(r);
    const auto pred_row = pred.assignment(*pred.find(ref.sample_id(r)));
    for (const auto& [label, truth] : ref_row.values) {
      const bool guess = pred_row.values.at(label);
      if (truth && guess) c.tp += 1;
      if (truth && !guess) c.fn += 1;
      if (!truth && guess) c.fp += 1;
      if (!truth && !guess) c.tn += 1;
    }
  }
  return c;
}

/// CRG by direct substitution into the weight and normalisation formulas.
inline double crg_by_formula(const ConfusionCounts& c) {
  const double t = static_cast<double>(c.tp + c.fn + c.fp + c.tn);
  const double a = static_cast<double>(c.tp + c.fn);
  const double w = (t - a) / (2.0 * a);
  const double s = c.tp * w - c.fn * w - c.fp * 1.0;
  const double s_max = a * w;
  return s_max / (2.0 * s_max - s);
}

/// Random valid (T, A) with 0 < A < T.
inline std::pair<std::int64_t, std::int64_t> random_t_a(std::mt19937_64& rng, std::int64_t max_t = 1'000'000) {
  const auto t = uniform_int(rng, 2, max_t);
  const auto a = uniform_int(rng, 1, t - 1);
  return {t, a};
}

/// Random counts with the given T and A.
inline ConfusionCounts random_counts(std::mt19937_64& rng, std::int64_t t, std::int64_t a) {
  ConfusionCounts c;
  c.tp = uniform_int(rng, 0, a);
  c.fn = a - c.tp;
  c.fp = uniform_int(rng, 0, t - a);
  c.tn = t - a - c.fp;
  return c;
}

/// Random token corpus drawn from a small vocabulary.
inline std::vector<Tokens> random_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t min_len,
                                         std::size_t max_len, const std::vector<std::string>& vocab) {
  std::vector<Tokens> out;
  for (std::size_t d = 0; d < docs; ++d) {
    Tokens t;
    const auto len = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(min_len),
                                                          static_cast<std::int64_t>(max_len)));
    for (std::size_t i = 0; i < len; ++i) {
      t.push_back(vocab[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(vocab.size()) - 1))]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

/// Copy of `corpus` with each token replaced by a vocabulary word with
/// probability `p`, plus random insertions and deletions.
inline std::vector<Tokens> perturb(std::mt19937_64& rng, const std::vector<Tokens>& corpus, double p,
                                   const std::vector<std::string>& vocab) {
  std::bernoulli_distribution flip(p);
  std::vector<Tokens> out;
  for (const auto& doc : corpus) {
    Tokens t;
    for (const auto& tok : doc) {
      if (flip(rng)) {
        if (flip(rng)) continue;  // delete
        t.push_back(vocab[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(vocab.size()) - 1))]);
      } else {
        t.push_back(tok);
      }
      if (flip(rng) && flip(rng)) t.push_back(vocab.front());  // insert
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace crg::testing
