#include "absinstruct/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "absinstruct/error.hpp"
#include "absinstruct/metrics.hpp"
#include "absinstruct/prompts.hpp"
#include "absinstruct/rng.hpp"

namespace absinstruct::evaluation {

namespace {

std::optional<int> first_yes_no(std::string_view segment) {
  for (const std::string& token : metrics::tokenize(segment)) {
    if (token == "yes") return 1;
    if (token == "no") return 0;
  }
  return std::nullopt;
}

size_t find_last_ci(const std::string& haystack, std::string_view needle) {
  std::string lowered = haystack;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lowered.rfind(needle);
}

struct ExampleOutcome {
  bool ok = false;
  bool undecided = false;
  int prediction = 0;
  std::string error;
};

// Sample exemplars for one relation: balanced across labels where the store
// allows, then shuffled so labels interleave naturally in the prompt.
std::vector<std::pair<AbstractionTuple, int>> sample_exemplars(
    const std::vector<AbstractionTuple>& store, Relation relation, int want, uint64_t seed) {
  std::vector<const AbstractionTuple*> positives;
  std::vector<const AbstractionTuple*> negatives;
  for (const auto& tuple : store) {
    if (tuple.relation != relation) continue;
    (tuple.label == 1 ? positives : negatives).push_back(&tuple);
  }
  const size_t available = positives.size() + negatives.size();
  if (available < static_cast<size_t>(want))
    throw Error("exemplar store has " + std::to_string(available) + " " +
                std::string(to_string(relation)) + " tuples, need " + std::to_string(want));

  size_t want_pos = static_cast<size_t>(want) / 2;
  size_t want_neg = static_cast<size_t>(want) - want_pos;
  if (positives.size() < want_pos) {
    want_pos = positives.size();
    want_neg = static_cast<size_t>(want) - want_pos;
  } else if (negatives.size() < want_neg) {
    want_neg = negatives.size();
    want_pos = static_cast<size_t>(want) - want_neg;
  }

  std::vector<std::pair<AbstractionTuple, int>> exemplars;
  exemplars.reserve(static_cast<size_t>(want));
  Rng pos_rng(derive_seed(seed, "exemplars-label1|" + std::string(to_string(relation))));
  for (size_t i : sample_indices(positives.size(), want_pos, pos_rng))
    exemplars.emplace_back(*positives[i], 1);
  Rng neg_rng(derive_seed(seed, "exemplars-label0|" + std::string(to_string(relation))));
  for (size_t i : sample_indices(negatives.size(), want_neg, neg_rng))
    exemplars.emplace_back(*negatives[i], 0);
  Rng order_rng(derive_seed(seed, "exemplars-order|" + std::string(to_string(relation))));
  shuffle(exemplars, order_rng);
  return exemplars;
}

RelationMetrics metrics_for(const std::vector<int>& predictions, const std::vector<int>& golds,
                            long undecided) {
  RelationMetrics out;
  if (predictions.empty()) return out;
  const auto report = metrics::classification_report(predictions, golds);
  out.accuracy = report.accuracy;
  out.macro_f1 = report.macro_f1;
  out.n = static_cast<long>(report.n);
  out.undecided_rate = static_cast<double>(undecided) / static_cast<double>(report.n);
  return out;
}

std::string format_pct(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%8.2f", value * 100.0);
  return buffer;
}

}  // namespace

std::optional<int> parse_label(std::string_view response) {
  const std::string text(response);
  size_t start = 0;
  const size_t spaced = find_last_ci(text, "step 2:");
  const size_t tight = find_last_ci(text, "step2:");
  if (spaced != std::string::npos || tight != std::string::npos) {
    size_t marker = 0;
    size_t marker_len = 0;
    if (spaced != std::string::npos && (tight == std::string::npos || spaced > tight)) {
      marker = spaced;
      marker_len = 7;
    } else {
      marker = tight;
      marker_len = 6;
    }
    start = marker + marker_len;
  }
  return first_yes_no(std::string_view(text).substr(start));
}

std::string_view to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::ZeroShot: return "zero_shot";
    case EvalMode::FewShot: return "few_shot";
    case EvalMode::TunedPrompt: return "tuned_prompt";
  }
  throw Error("unknown eval mode");
}

EvalMode eval_mode_from_string(std::string_view text) {
  if (text == "zero_shot") return EvalMode::ZeroShot;
  if (text == "few_shot") return EvalMode::FewShot;
  if (text == "tuned_prompt") return EvalMode::TunedPrompt;
  throw ConfigError("unknown eval mode: " + std::string(text));
}

MetricReport evaluate_detection(ServiceClient& client,
                                const std::vector<AbstractionTuple>& examples,
                                const DetectionOptions& options,
                                const std::vector<AbstractionTuple>& exemplar_store) {
  if (options.self_consistency < 1) throw ConfigError("self_consistency must be >= 1");
  if (options.self_consistency > 1 && options.sample_temperature <= 0.0)
    throw ConfigError("self_consistency > 1 requires sample_temperature > 0");
  if (options.mode == EvalMode::FewShot && options.fewshot_n < 0)
    throw ConfigError("fewshot_n must be >= 0");

  // Exemplars are drawn once per relation per run.
  std::map<Relation, std::vector<std::pair<AbstractionTuple, int>>> exemplars;
  if (options.mode == EvalMode::FewShot) {
    for (Relation relation : kAllRelations) {
      const bool present = std::any_of(examples.begin(), examples.end(),
                                       [&](const auto& t) { return t.relation == relation; });
      if (present)
        exemplars[relation] =
            sample_exemplars(exemplar_store, relation, options.fewshot_n, options.seed);
    }
  }

  auto render_prompt = [&](const AbstractionTuple& tuple) {
    switch (options.mode) {
      case EvalMode::ZeroShot:
        return prompts::render_zero_shot_prompt(tuple);
      case EvalMode::FewShot:
        return prompts::render_fewshot_prompt(tuple.relation, exemplars.at(tuple.relation), tuple);
      case EvalMode::TunedPrompt:
        return prompts::render_training_prompt(
            prompts::render_instruction(tuple.relation, prompts::PromptStyle::TwoStep),
            prompts::render_input(tuple));
    }
    throw Error("unknown eval mode");
  };

  std::vector<size_t> indices(examples.size());
  std::iota(indices.begin(), indices.end(), size_t{0});
  const auto outcomes =
      parallel_map(indices, options.max_concurrency, [&](size_t index) {
        ExampleOutcome outcome;
        const AbstractionTuple& tuple = examples[index];
        try {
          GenerationRequest request;
          request.prompt = render_prompt(tuple);
          request.model_id = options.model_id;
          request.max_tokens = options.max_tokens;
          request.num_samples = options.self_consistency;
          request.temperature = options.self_consistency > 1 ? options.sample_temperature : 0.0;
          const auto samples = client.generate(request);

          int yes = 0;
          int no = 0;
          for (const auto& sample : samples) {
            const auto label = parse_label(sample);
            if (!label) continue;  // unparseable samples are excluded from the vote
            (*label == 1 ? yes : no) += 1;
          }
          if (yes > no) {
            outcome.prediction = 1;
          } else if (no > yes) {
            outcome.prediction = 0;
          } else {
            outcome.undecided = true;
            outcome.prediction = 1 - tuple.label;  // ties and blanks count as incorrect
          }
          outcome.ok = true;
        } catch (const std::exception& e) {
          outcome.error = e.what();
        }
        return outcome;
      });

  MetricReport report;
  report.model_id = options.model_id;
  report.mode = std::string(to_string(options.mode));
  report.self_consistency = options.self_consistency;
  report.seed = options.seed;
  report.requested = static_cast<long>(examples.size());

  std::map<Relation, std::vector<int>> predictions;
  std::map<Relation, std::vector<int>> golds;
  std::map<Relation, long> undecided;
  std::vector<int> all_predictions;
  std::vector<int> all_golds;
  long all_undecided = 0;

  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& outcome = outcomes[i];
    if (!outcome.ok) {
      report.failures.push_back("example " + std::to_string(i) + ": " + outcome.error);
      continue;
    }
    ++report.completed;
    const Relation relation = examples[i].relation;
    predictions[relation].push_back(outcome.prediction);
    golds[relation].push_back(examples[i].label);
    undecided[relation] += outcome.undecided ? 1 : 0;
    all_predictions.push_back(outcome.prediction);
    all_golds.push_back(examples[i].label);
    all_undecided += outcome.undecided ? 1 : 0;
  }

  for (const auto& [relation, preds] : predictions)
    report.per_relation[std::string(to_string(relation))] =
        metrics_for(preds, golds[relation], undecided[relation]);
  report.aggregate = metrics_for(all_predictions, all_golds, all_undecided);
  return report;
}

GenerationReport evaluate_generation(ServiceClient& client,
                                     const std::vector<GenerationTask>& tasks,
                                     const std::string& model_id, int max_tokens,
                                     int max_concurrency) {
  struct TaskOutcome {
    bool ok = false;
    double rouge_l = 0.0, bleu_1 = 0.0, bleu_2 = 0.0, meteor = 0.0;
    std::string error;
  };

  const auto outcomes = parallel_map(tasks, max_concurrency, [&](const GenerationTask& task) {
    TaskOutcome outcome;
    try {
      GenerationRequest request;
      request.prompt = task.prompt;
      request.model_id = model_id;
      request.max_tokens = max_tokens;
      const auto texts = client.generate(request);
      const std::string& generation = texts.at(0);
      outcome.rouge_l = metrics::rouge_l(generation, task.reference);
      outcome.bleu_1 = metrics::bleu(generation, task.reference, 1);
      outcome.bleu_2 = metrics::bleu(generation, task.reference, 2);
      outcome.meteor = metrics::meteor(generation, task.reference);
      outcome.ok = true;
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    return outcome;
  });

  GenerationReport report;
  report.model_id = model_id;
  report.n = static_cast<long>(tasks.size());
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok) {
      report.failures.push_back("task " + std::to_string(i) + ": " + outcomes[i].error);
      continue;
    }
    ++report.completed;
    report.rouge_l += outcomes[i].rouge_l;
    report.bleu_1 += outcomes[i].bleu_1;
    report.bleu_2 += outcomes[i].bleu_2;
    report.meteor += outcomes[i].meteor;
  }
  if (report.completed > 0) {
    const double denom = static_cast<double>(report.completed);
    report.rouge_l /= denom;
    report.bleu_1 /= denom;
    report.bleu_2 /= denom;
    report.meteor /= denom;
  }
  return report;
}

DiversityReport diversity_report(const std::vector<CandidateExample>& examples,
                                 std::string_view field) {
  if (examples.size() < 2) throw Error("diversity_report requires at least 2 examples");
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(examples.size());
  for (const auto& example : examples) {
    std::string text;
    if (field == "head_event") {
      text = example.tuple.head_event;
    } else if (field == "trace") {
      text = example.trace.instance_meaning + " " + example.trace.concept_meaning;
    } else {
      throw ConfigError("unknown diversity field: " + std::string(field));
    }
    tokens.push_back(metrics::tokenize(text));
  }

  const size_t n = examples.size();
  std::vector<double> max_similarity(n, 0.0);
  double pair_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double similarity = metrics::rouge_l(tokens[i], tokens[j]);
      pair_sum += similarity;
      max_similarity[i] = std::max(max_similarity[i], similarity);
      max_similarity[j] = std::max(max_similarity[j], similarity);
    }
  }

  DiversityReport report;
  report.n = static_cast<long>(n);
  report.histogram.assign(10, 0);
  long unique = 0;
  for (double value : max_similarity) {
    const int bin = std::min(9, static_cast<int>(value * 10.0));
    ++report.histogram[static_cast<size_t>(bin)];
    if (value <= 0.7) ++unique;
  }
  report.mean_pairwise = pair_sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
  report.unique_fraction = static_cast<double>(unique) / static_cast<double>(n);
  return report;
}

std::string render_detection_table(const MetricReport& report) {
  std::string out;
  out += "mode: " + report.mode + "  model: " + report.model_id +
         "  self_consistency: " + std::to_string(report.self_consistency) + "\n";
  out += "relation        accuracy  macro_f1  undecided         n\n";
  auto row = [&](const std::string& name, const RelationMetrics& m) {
    char count[16];
    std::snprintf(count, sizeof(count), "%10ld", m.n);
    out += name + std::string(name.size() < 14 ? 14 - name.size() : 1, ' ') +
           format_pct(m.accuracy) + "  " + format_pct(m.macro_f1) + "   " +
           format_pct(m.undecided_rate) + count + "\n";
  };
  for (const auto& [name, metrics] : report.per_relation) row(name, metrics);
  row("all", report.aggregate);
  if (report.completed < report.requested)
    out += "coverage: " + std::to_string(report.completed) + "/" +
           std::to_string(report.requested) + " examples completed\n";
  return out;
}

}  // namespace absinstruct::evaluation
