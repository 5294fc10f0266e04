#include "absinstruct/curation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "absinstruct/error.hpp"
#include "absinstruct/metrics.hpp"
#include "absinstruct/rng.hpp"

namespace absinstruct::curation {

namespace {

struct StepMarker {
  size_t begin = 0;  // offset of the 'S'/'s'
  size_t end = 0;    // offset one past the ':'
  int step = 0;
};

bool match_marker(const std::string& text, size_t pos, StepMarker* out) {
  static constexpr std::string_view kWord = "step";
  if (pos + kWord.size() >= text.size()) return false;
  for (size_t k = 0; k < kWord.size(); ++k)
    if (std::tolower(static_cast<unsigned char>(text[pos + k])) != kWord[k]) return false;
  size_t i = pos + kWord.size();
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i >= text.size() || text[i] < '1' || text[i] > '3') return false;
  int step = text[i] - '0';
  ++i;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i >= text.size() || text[i] != ':') return false;
  out->begin = pos;
  out->end = i + 1;
  out->step = step;
  return true;
}

std::vector<StepMarker> find_markers(const std::string& text) {
  std::vector<StepMarker> markers;
  for (size_t i = 0; i < text.size(); ++i) {
    StepMarker marker;
    if (match_marker(text, i, &marker)) {
      markers.push_back(marker);
      i = marker.end - 1;
    }
  }
  return markers;
}

std::string trimmed(std::string_view text) {
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

// First standalone yes/no word in the segment, ignoring case.
std::optional<int> first_yes_no(std::string_view segment) {
  for (const std::string& token : metrics::tokenize(segment)) {
    if (token == "yes") return 1;
    if (token == "no") return 0;
  }
  return std::nullopt;
}

// Lowercase and collapse every whitespace run to one space.
std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string format_similarity(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

}  // namespace

ExplanationTrace parse_trace(const std::string& raw, const AbstractionTuple&) {
  ExplanationTrace trace;
  trace.raw_generation = raw;

  const auto markers = find_markers(raw);
  for (size_t i = 0; i < markers.size(); ++i) {
    const auto& marker = markers[i];
    const size_t seg_begin = marker.end;
    const size_t seg_end = i + 1 < markers.size() ? markers[i + 1].begin : raw.size();
    const std::string segment = trimmed(std::string_view(raw).substr(seg_begin, seg_end - seg_begin));
    switch (marker.step) {
      case 1:
        if (trace.instance_meaning.empty()) trace.instance_meaning = segment;
        break;
      case 2:
        if (trace.concept_meaning.empty()) trace.concept_meaning = segment;
        break;
      case 3:
        if (!trace.predicted_label) trace.predicted_label = first_yes_no(segment);
        break;
    }
  }
  return trace;
}

FilterVerdict prediction_filter(const ExplanationTrace& trace, int gold) {
  FilterVerdict verdict;
  verdict.filter_name = "prediction";
  if (!trace.predicted_label) {
    verdict.passed = false;
    verdict.detail = "unparsed prediction";
    return verdict;
  }
  verdict.passed = *trace.predicted_label == gold;
  if (!verdict.passed)
    verdict.detail = "predicted " + std::to_string(*trace.predicted_label) + ", gold " +
                     std::to_string(gold);
  return verdict;
}

FilterVerdict keyword_filter(const ExplanationTrace& trace, const AbstractionTuple& tuple) {
  FilterVerdict verdict;
  verdict.filter_name = "keyword";
  const std::string haystack =
      normalize_for_match(trace.instance_meaning + " " + trace.concept_meaning);
  const bool has_instance = haystack.find(normalize_for_match(tuple.instance)) != std::string::npos;
  const bool has_concept = haystack.find(normalize_for_match(tuple.concept_term)) != std::string::npos;
  verdict.passed = has_instance && has_concept;
  if (!verdict.passed) {
    verdict.detail = "trace omits ";
    if (!has_instance) verdict.detail += "\"" + tuple.instance + "\"";
    if (!has_instance && !has_concept) verdict.detail += " and ";
    if (!has_concept) verdict.detail += "\"" + tuple.concept_term + "\"";
  }
  return verdict;
}

std::vector<CandidateExample> annotate_diversity(std::vector<CandidateExample> candidates,
                                                 double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw ConfigError("diversity threshold must lie in [0, 1]");

  std::vector<std::vector<std::string>> kept_tokens;
  std::vector<size_t> kept_indices;
  for (size_t i = 0; i < candidates.size(); ++i) {
    auto tokens = metrics::tokenize(candidates[i].input);
    double worst = 0.0;
    size_t worst_index = 0;
    for (size_t k = 0; k < kept_tokens.size(); ++k) {
      double similarity = metrics::rouge_l(tokens, kept_tokens[k]);
      if (similarity > worst) {
        worst = similarity;
        worst_index = kept_indices[k];
      }
    }
    // The first candidate has nothing to collide with and is always kept.
    if (kept_tokens.empty() || worst < threshold) {
      candidates[i].filter_status.diversity = VerdictState::Pass;
      kept_tokens.push_back(std::move(tokens));
      kept_indices.push_back(i);
    } else {
      candidates[i].filter_status.diversity = VerdictState::Fail;
      if (candidates[i].filter_status.detail.empty())
        candidates[i].filter_status.detail = "rouge_l " + format_similarity(worst) +
                                             " vs earlier kept candidate " +
                                             std::to_string(worst_index);
    }
  }
  return candidates;
}

std::vector<CandidateExample> diversity_filter(const std::vector<CandidateExample>& candidates,
                                               double threshold) {
  auto annotated = annotate_diversity(candidates, threshold);
  std::vector<CandidateExample> kept;
  for (auto& candidate : annotated)
    if (candidate.filter_status.diversity == VerdictState::Pass)
      kept.push_back(std::move(candidate));
  return kept;
}

double plausibility(const ScoreResult& score) {
  if (score.token_logprobs.empty()) throw Error("plausibility: empty token list");
  const double sum =
      std::accumulate(score.token_logprobs.begin(), score.token_logprobs.end(), 0.0);
  return sum / static_cast<double>(score.token_logprobs.size());
}

std::vector<CandidateExample> select_top_k(const std::vector<CandidateExample>& pool, int k,
                                           PlausibilityMode mode, uint64_t seed) {
  if (k < 1 || k % 2 != 0) throw ConfigError("k must be a positive even number");
  std::vector<size_t> positives;
  std::vector<size_t> negatives;
  for (size_t i = 0; i < pool.size(); ++i)
    (pool[i].tuple.label == 1 ? positives : negatives).push_back(i);

  const size_t half = static_cast<size_t>(k) / 2;
  if (positives.size() < half)
    throw Error("insufficient label-1 examples: have " + std::to_string(positives.size()) +
                ", need " + std::to_string(half));
  if (negatives.size() < half)
    throw Error("insufficient label-0 examples: have " + std::to_string(negatives.size()) +
                ", need " + std::to_string(half));

  auto pick = [&](std::vector<size_t>& group, std::string_view tag) {
    if (mode == PlausibilityMode::Random) {
      Rng rng(derive_seed(seed, tag));
      auto draws = sample_indices(group.size(), half, rng);
      std::vector<size_t> picks;
      picks.reserve(half);
      for (size_t d : draws) picks.push_back(group[d]);
      return picks;
    }
    for (size_t i : group)
      if (!pool[i].plausibility)
        throw Error("candidate " + std::to_string(i) + " has no plausibility score");
    std::stable_sort(group.begin(), group.end(), [&](size_t a, size_t b) {
      return *pool[a].plausibility > *pool[b].plausibility;
    });
    group.resize(half);
    return group;
  };

  const auto pos_picks = pick(positives, "select-label1");
  const auto neg_picks = pick(negatives, "select-label0");

  std::vector<CandidateExample> selected;
  selected.reserve(static_cast<size_t>(k));
  for (size_t i = 0; i < half; ++i) {
    selected.push_back(pool[pos_picks[i]]);
    selected.push_back(pool[neg_picks[i]]);
  }
  return selected;
}

std::vector<InstructionRecord> mix_datasets(std::vector<InstructionRecord> abstraction,
                                            std::vector<InstructionRecord> general,
                                            uint64_t seed) {
  std::vector<InstructionRecord> mixed = std::move(abstraction);
  mixed.insert(mixed.end(), std::make_move_iterator(general.begin()),
               std::make_move_iterator(general.end()));
  Rng rng(seed);
  shuffle(mixed, rng);
  return mixed;
}

}  // namespace absinstruct::curation
