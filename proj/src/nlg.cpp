#include "crg/nlg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace crg {

namespace {

void check_corpora(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  if (candidates.empty()) throw std::invalid_argument("empty corpus");
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("candidate and reference corpora differ in size");
  }
}

using NgramCounts = std::map<std::string, int>;

std::string join_ngram(const Tokens& tokens, std::size_t start, std::size_t n) {
  std::string key = tokens[start];
  for (std::size_t k = 1; k < n; ++k) {
    key.push_back('\x1f');
    key += tokens[start + k];
  }
  return key;
}

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[join_ngram(tokens, i, n)];
  return counts;
}

// Sums in ascending order, so corpus averages do not depend on pair order.
double order_free_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int max_n,
            const BleuOptions& options) {
  check_corpora(candidates, references);
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("BLEU order must be in 1..4");

  std::vector<std::int64_t> clipped(static_cast<std::size_t>(max_n), 0);
  std::vector<std::int64_t> total(static_cast<std::size_t>(max_n), 0);
  std::int64_t cand_len = 0;
  std::int64_t ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<std::int64_t>(candidates[i].size());
    ref_len += static_cast<std::int64_t>(references[i].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto cand = count_ngrams(candidates[i], static_cast<std::size_t>(n));
      const auto ref = count_ngrams(references[i], static_cast<std::size_t>(n));
      for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) clipped[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
        total[static_cast<std::size_t>(n - 1)] += count;
      }
    }
  }
  if (cand_len == 0) return 0.0;

  double log_sum = 0.0;
  for (std::size_t k = 0; k < clipped.size(); ++k) {
    double p;
    if (clipped[k] > 0) {
      p = static_cast<double>(clipped[k]) / static_cast<double>(total[k]);
    } else if (options.smoothing) {
      p = options.epsilon / static_cast<double>(std::max<std::int64_t>(total[k], 1));
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  const double bp = cand_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_sum / max_n);
}

// ---------------------------------------------------------------------------
// ROUGE-L
// ---------------------------------------------------------------------------

namespace {

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_l_pair(const Tokens& candidate, const Tokens& reference, double beta) {
  const std::size_t lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double rouge_l(std::span<const Tokens> candidates, std::span<const Tokens> references, double beta) {
  check_corpora(candidates, references);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores.push_back(rouge_l_pair(candidates[i], references[i], beta));
  }
  return order_free_mean(std::move(scores));
}

// ---------------------------------------------------------------------------
// METEOR
// ---------------------------------------------------------------------------

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> cand_to_ref(candidate.size(), none);
  std::vector<bool> ref_used(reference.size(), false);

  auto run_stage = [&](const std::vector<std::string>& cand_keys,
                       const std::vector<std::string>& ref_keys) {
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (cand_to_ref[i] != none) continue;
      const std::size_t prev = (i > 0 && cand_to_ref[i - 1] != none) ? cand_to_ref[i - 1] : none;
      std::size_t best = none;
      std::size_t best_run = 0;
      bool best_continues = false;
      for (std::size_t j = 0; j < reference.size(); ++j) {
        if (ref_used[j] || ref_keys[j] != cand_keys[i]) continue;
        const bool continues = prev != none && j == prev + 1;
        std::size_t run = 1;
        while (i + run < candidate.size() && j + run < reference.size() &&
               cand_to_ref[i + run] == none && !ref_used[j + run] &&
               cand_keys[i + run] == ref_keys[j + run]) {
          ++run;
        }
        // Continuing the previous chunk wins, then the longest run, then the earliest slot.
        if (best == none || (continues && !best_continues) ||
            (continues == best_continues && run > best_run)) {
          best = j;
          best_run = run;
          best_continues = continues;
        }
      }
      if (best != none) {
        cand_to_ref[i] = best;
        ref_used[best] = true;
      }
    }
  };

  run_stage(candidate, reference);
  std::vector<std::string> cand_stems, ref_stems;
  for (const auto& t : candidate) cand_stems.push_back(porter_stem(t));
  for (const auto& t : reference) ref_stems.push_back(porter_stem(t));
  run_stage(cand_stems, ref_stems);

  MeteorAlignment out;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (cand_to_ref[i] == none) continue;
    const bool extends = !out.matches.empty() && out.matches.back().first + 1 == i &&
                         out.matches.back().second + 1 == cand_to_ref[i];
    if (!extends) ++out.chunks;
    out.matches.emplace_back(i, cand_to_ref[i]);
  }
  return out;
}

double meteor_pair(const Tokens& candidate, const Tokens& reference, const MeteorParams& params) {
  const auto alignment = meteor_align(candidate, reference);
  const auto m = static_cast<double>(alignment.matches.size());
  if (alignment.matches.empty()) return 0.0;
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
  const bool complete = alignment.matches.size() == candidate.size() &&
                        alignment.matches.size() == reference.size() && alignment.chunks == 1;
  const double frag = complete ? 0.0 : static_cast<double>(alignment.chunks) / m;
  const double penalty = params.gamma * std::pow(frag, params.beta);
  return fmean * (1.0 - penalty);
}

double meteor(std::span<const Tokens> candidates, std::span<const Tokens> references,
              const MeteorParams& params) {
  check_corpora(candidates, references);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores.push_back(meteor_pair(candidates[i], references[i], params));
  }
  return order_free_mean(std::move(scores));
}

// ---------------------------------------------------------------------------
// CIDEr-D
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kCiderOrders = 4;

struct CiderVector {
  std::array<std::map<std::string, double>, kCiderOrders> weights;
  std::array<double, kCiderOrders> norm{};
  double length = 0.0;  // bigram count
};

using DocFreq = std::array<std::map<std::string, int>, kCiderOrders>;

CiderVector to_vector(const Tokens& tokens, const DocFreq& df, double log_ref_len) {
  CiderVector v;
  for (std::size_t n = 0; n < kCiderOrders; ++n) {
    for (const auto& [gram, tf] : count_ngrams(tokens, n + 1)) {
      auto it = df[n].find(gram);
      const double doc_freq = it == df[n].end() ? 0.0 : it->second;
      const double w = tf * (log_ref_len - std::log(std::max(1.0, doc_freq)));
      v.weights[n].emplace(gram, w);
      v.norm[n] += w * w;
      if (n == 1) v.length += tf;
    }
    v.norm[n] = std::sqrt(v.norm[n]);
  }
  return v;
}

double cider_similarity(const CiderVector& hyp, const CiderVector& ref, double sigma) {
  const double delta = hyp.length - ref.length;
  const double damping = std::exp(-(delta * delta) / (2.0 * sigma * sigma));
  double sum = 0.0;
  for (std::size_t n = 0; n < kCiderOrders; ++n) {
    double val = 0.0;
    for (const auto& [gram, w] : hyp.weights[n]) {
      auto it = ref.weights[n].find(gram);
      if (it == ref.weights[n].end()) continue;
      val += std::min(w, it->second) * it->second;
    }
    if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) val /= hyp.norm[n] * ref.norm[n];
    sum += val * damping;
  }
  return sum / static_cast<double>(kCiderOrders);
}

}  // namespace

CiderResult cider(std::span<const Tokens> candidates, std::span<const Tokens> references,
                  double sigma) {
  check_corpora(candidates, references);
  CiderResult out;

  DocFreq df;
  for (const auto& ref : references) {
    for (std::size_t n = 0; n < kCiderOrders; ++n) {
      for (const auto& entry : count_ngrams(ref, n + 1)) ++df[n][entry.first];
    }
  }
  double docs = static_cast<double>(references.size());
  if (references.size() == 1) {
    out.warnings.push_back("CIDEr: single-reference corpus, idf smoothed with one pseudo-document");
    docs += 1.0;
  }
  const double log_ref_len = std::log(docs);

  out.per_pair.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto hyp = to_vector(candidates[i], df, log_ref_len);
    const auto ref = to_vector(references[i], df, log_ref_len);
    out.per_pair.push_back(10.0 * cider_similarity(hyp, ref, sigma));
  }
  out.score = order_free_mean(out.per_pair);
  return out;
}

// ---------------------------------------------------------------------------

NlgScores nlg_scores(std::span<const Tokens> candidates, std::span<const Tokens> references,
                     const NlgConfig& config) {
  NlgScores s;
  for (int n = 1; n <= 4; ++n) {
    s.bleu[static_cast<std::size_t>(n - 1)] = bleu(candidates, references, n, config.bleu);
  }
  s.meteor = meteor(candidates, references, config.meteor);
  s.rouge_l = rouge_l(candidates, references, config.rouge_beta);
  auto c = cider(candidates, references, config.cider_sigma);
  s.cider = c.score;
  s.warnings = std::move(c.warnings);
  return s;
}

}  // namespace crg
