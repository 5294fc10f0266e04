#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace absinstruct::metrics {

// Lowercased alphanumeric word tokens; splits on any maximal run of
// non-alphanumeric characters, drops empties. All metrics below share this
// tokenization.
std::vector<std::string> tokenize(std::string_view text);

// Longest common subsequence length (classic DP).
size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// ROUGE-L F1 between two texts: P = LCS/|cand|, R = LCS/|ref|,
// F = 2PR/(P+R), computed as 2*LCS/(|cand|+|ref|). Zero when either side
// tokenizes to empty or the LCS is empty. Symmetric in its arguments.
double rouge_l(std::string_view candidate, std::string_view reference);
double rouge_l(const std::vector<std::string>& candidate_tokens,
               const std::vector<std::string>& reference_tokens);

// Sentence-level BLEU with uniform weights over n-gram orders 1..max_n,
// clipped (modified) precisions, brevity penalty exp(1 - |ref|/|cand|) when
// the candidate is shorter, and 1e-9 smoothing of zero match counts. Orders
// longer than the candidate are skipped so that bleu(x, x) == 1.
double bleu(std::string_view candidate, std::string_view reference, int max_n);

// Porter stemmer (the classic algorithm, steps 1a-5b) over a lowercase word.
std::string porter_stem(std::string_view word);

// Meteor with exact and Porter-stem matching stages. Among maximum-size
// alignments the one with the fewest chunks is chosen (bounded search with a
// greedy fallback on adversarial inputs). F_mean = P*R/(alpha*P+(1-alpha)*R)
// with alpha = 0.9; penalty = gamma*(chunks/matches)^beta with beta = 3,
// gamma = 0.5; score = F_mean*(1-penalty). Zero when nothing matches.
double meteor(std::string_view candidate, std::string_view reference);

struct ClassificationReport {
  double accuracy = 0.0;
  double f1_positive = 0.0;
  double f1_negative = 0.0;
  double macro_f1 = 0.0;
  size_t n = 0;
};

// Accuracy, per-class F1 over {1, 0} (0/0 ratios collapse to 0), and the
// unweighted mean of the two F1 scores. Throws on empty or mismatched input.
ClassificationReport classification_report(const std::vector<int>& predictions,
                                           const std::vector<int>& golds);

}  // namespace absinstruct::metrics
