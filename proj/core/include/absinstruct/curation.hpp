#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "absinstruct/client.hpp"
#include "absinstruct/config.hpp"
#include "absinstruct/types.hpp"

namespace absinstruct::curation {

// Splits a three-step generation into instance meaning (step 1), concept
// meaning (step 2) and a Yes/No verdict (step 3). Accepts "Step 1:" and
// "Step1:" marker spellings. Parse failures are data, not errors: a missing
// step yields an unparsed trace that downstream filters reject.
ExplanationTrace parse_trace(const std::string& raw, const AbstractionTuple& tuple);

// Passes iff the trace's own verdict matches the gold label. An absent
// verdict fails with detail "unparsed prediction".
FilterVerdict prediction_filter(const ExplanationTrace& trace, int gold);

// Passes iff the concatenated meanings contain both the instance and the
// concept as case-insensitive substrings after whitespace normalization.
FilterVerdict keyword_filter(const ExplanationTrace& trace, const AbstractionTuple& tuple);

// Greedy pass in input order: a candidate is kept iff its maximum ROUGE-L F1
// (over rendered input text) against all previously kept candidates is
// strictly below the threshold. Returns the kept candidates, order preserved,
// each with filter_status.diversity set to Pass.
std::vector<CandidateExample> diversity_filter(const std::vector<CandidateExample>& candidates,
                                               double threshold);

// Same greedy pass, but returns every candidate annotated Pass or Fail so the
// pipeline can account for drops.
std::vector<CandidateExample> annotate_diversity(std::vector<CandidateExample> candidates,
                                                 double threshold);

// Mean token log-probability: the log of the N-th root of the product of the
// token probabilities. Throws on an empty token list.
double plausibility(const ScoreResult& score);

// Balanced top-k: k/2 candidates per label. Score modes sort each label group
// by plausibility descending with ties broken by pool order (stable); random
// mode samples k/2 per label from the seed. Output interleaves the two label
// groups (positive first) preserving each group's order.
std::vector<CandidateExample> select_top_k(const std::vector<CandidateExample>& pool, int k,
                                           PlausibilityMode mode, uint64_t seed);

// Union of the two lists in a seed-deterministic uniform shuffle.
std::vector<InstructionRecord> mix_datasets(std::vector<InstructionRecord> abstraction,
                                            std::vector<InstructionRecord> general, uint64_t seed);

}  // namespace absinstruct::curation
