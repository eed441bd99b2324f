#pragma once

// Corpus-level text-overlap metrics over single-reference pairs. Candidates
// and references are parallel spans of token lists; callers align them first.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "crg/text.hpp"

namespace crg {

struct BleuOptions {
  /// Replace a zero clipped n-gram count with `epsilon` instead of letting
  /// the geometric mean collapse to zero.
  bool smoothing = false;
  double epsilon = 0.1;
};

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct NlgConfig {
  BleuOptions bleu;
  double rouge_beta = 1.2;
  MeteorParams meteor;
  double cider_sigma = 6.0;
};

struct NlgScores {
  std::array<double, 4> bleu{};  // BLEU-1 .. BLEU-4
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::vector<std::string> warnings;
};

/// Corpus BLEU-`max_n`: clipped n-gram precisions pooled over the corpus,
/// uniform geometric mean over orders 1..max_n, times the brevity penalty.
double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int max_n,
            const BleuOptions& options = {});

/// LCS F-measure per pair, averaged over the corpus.
double rouge_l(std::span<const Tokens> candidates, std::span<const Tokens> references,
               double beta = 1.2);
double rouge_l_pair(const Tokens& candidate, const Tokens& reference, double beta = 1.2);

/// Unigram alignment over exact then Porter-stem matches.
struct MeteorAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (candidate, reference), by candidate
  std::size_t chunks = 0;
};
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference);

/// Harmonic F-mean times the fragmentation penalty for one pair. A pair that
/// matches completely in a single chunk takes no penalty.
double meteor_pair(const Tokens& candidate, const Tokens& reference, const MeteorParams& params = {});
/// Mean of the per-pair scores.
double meteor(std::span<const Tokens> candidates, std::span<const Tokens> references,
              const MeteorParams& params = {});

struct CiderResult {
  double score = 0.0;  // corpus mean, scaled by 10
  std::vector<double> per_pair;
  std::vector<std::string> warnings;
};

/// CIDEr-D: tf-idf n-gram vectors (n = 1..4) with document frequencies from
/// the reference corpus, clipped cosine similarity, Gaussian length penalty.
/// A corpus of one reference has no usable idf, so document frequency is
/// smoothed with one pseudo-document and a warning is returned.
CiderResult cider(std::span<const Tokens> candidates, std::span<const Tokens> references,
                  double sigma = 6.0);

NlgScores nlg_scores(std::span<const Tokens> candidates, std::span<const Tokens> references,
                     const NlgConfig& config = {});

}  // namespace crg
