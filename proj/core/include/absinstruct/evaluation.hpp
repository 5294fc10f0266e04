#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absinstruct/client.hpp"
#include "absinstruct/types.hpp"

namespace absinstruct::evaluation {

// First standalone Yes/No (case-insensitive) in the final "Step2:" segment
// when one exists, else in the whole text. Absent when neither word occurs.
std::optional<int> parse_label(std::string_view response);

enum class EvalMode { ZeroShot, FewShot, TunedPrompt };

std::string_view to_string(EvalMode mode);
EvalMode eval_mode_from_string(std::string_view text);

struct DetectionOptions {
  EvalMode mode = EvalMode::ZeroShot;
  int fewshot_n = 10;        // exemplars per prompt in FewShot mode
  int self_consistency = 1;  // samples per example; majority vote when > 1
  double sample_temperature = 1.0;  // used only when self_consistency > 1
  int max_tokens = 128;
  uint64_t seed = 42;  // exemplar sampling
  std::string model_id;
  int max_concurrency = 4;
};

struct RelationMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  long n = 0;
  // Fraction of examples where the vote tied or nothing parsed; those count
  // as incorrect predictions rather than being dropped.
  double undecided_rate = 0.0;
};

struct MetricReport {
  std::map<std::string, RelationMetrics> per_relation;  // keyed by relation string
  RelationMetrics aggregate;  // pooled over all predictions, not averaged
  std::string model_id;
  std::string mode;
  int self_consistency = 1;
  uint64_t seed = 0;
  long requested = 0;
  long completed = 0;                  // examples whose generation call succeeded
  std::vector<std::string> failures;   // "example <index>: <error>"
};

// Renders the mode's prompt per example, samples, majority-votes and scores.
// Endpoint failures are recorded per example and skipped; the report covers
// completed examples and carries requested/completed for coverage.
MetricReport evaluate_detection(ServiceClient& client,
                                const std::vector<AbstractionTuple>& examples,
                                const DetectionOptions& options,
                                const std::vector<AbstractionTuple>& exemplar_store = {});

struct GenerationTask {
  std::string prompt;
  std::string reference;
};

struct GenerationReport {
  double rouge_l = 0.0;
  double bleu_1 = 0.0;
  double bleu_2 = 0.0;
  double meteor = 0.0;
  long n = 0;
  long completed = 0;
  std::vector<std::string> failures;
  std::string model_id;
};

// One greedy generation per task; per-task sentence metrics averaged
// uniformly over completed tasks.
GenerationReport evaluate_generation(ServiceClient& client,
                                     const std::vector<GenerationTask>& tasks,
                                     const std::string& model_id, int max_tokens = 256,
                                     int max_concurrency = 4);

struct DiversityReport {
  std::vector<long> histogram;   // 10 bins of width 0.1 over per-example max similarity
  double mean_pairwise = 0.0;    // mean ROUGE-L over unordered pairs
  double unique_fraction = 0.0;  // share of examples with max similarity <= 0.7
  long n = 0;
};

// field selects the compared text: "head_event" or "trace" (the concatenated
// meanings). Requires at least two examples.
DiversityReport diversity_report(const std::vector<CandidateExample>& examples,
                                 std::string_view field);

// Plain-text table: one row per relation plus a pooled "all" row.
std::string render_detection_table(const MetricReport& report);

}  // namespace absinstruct::evaluation
