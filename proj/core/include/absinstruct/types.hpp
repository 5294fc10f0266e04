#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace absinstruct {

// Which component of the head event is abstracted.
enum class Relation { NounEntail, VerbEntail, EventEntail };

inline constexpr Relation kAllRelations[] = {
    Relation::NounEntail, Relation::VerbEntail, Relation::EventEntail};

std::string_view to_string(Relation relation);
Relation relation_from_string(std::string_view text);

// One labeled benchmark record. The tail event is the head event with the
// instance replaced by its concept; for EventEntail the instance is the whole
// head event.
struct AbstractionTuple {
  std::string head_event;
  Relation relation = Relation::NounEntail;
  std::string tail_event;
  std::string instance;
  std::string concept_term;
  int label = 0;  // 1 = valid abstraction

  bool operator==(const AbstractionTuple&) const = default;
};

// Throws SchemaError if a field violates the tuple invariants
// (empty head/instance/concept, label outside {0,1}, or an EventEntail
// record whose instance differs from its head event).
void validate(const AbstractionTuple& tuple);

// Instance meaning + concept meaning + the generator's own Yes/No, parsed
// from a three-step generation. An unparsed trace has empty meanings and no
// predicted label; the raw generation is always kept.
struct ExplanationTrace {
  std::string instance_meaning;
  std::string concept_meaning;
  std::optional<int> predicted_label;
  std::string raw_generation;

  bool parsed() const { return !instance_meaning.empty() && !concept_meaning.empty(); }
  bool operator==(const ExplanationTrace&) const = default;
};

enum class VerdictState { NotRun, Pass, Fail };

std::string_view to_string(VerdictState state);
VerdictState verdict_state_from_string(std::string_view text);

// Outcome of one quality/diversity filter on one candidate.
struct FilterVerdict {
  std::string filter_name;  // "prediction" | "keyword" | "diversity"
  bool passed = false;
  std::string detail;  // non-empty when passed is false
};

// Per-filter verdicts carried on a candidate through the pipeline.
struct FilterStatus {
  VerdictState prediction = VerdictState::NotRun;
  VerdictState keyword = VerdictState::NotRun;
  VerdictState diversity = VerdictState::NotRun;
  std::string detail;  // reason for the first failure, if any

  bool operator==(const FilterStatus&) const = default;
};

// A tuple joined with its rendered prompt texts, trace, filter verdicts and
// plausibility score.
struct CandidateExample {
  AbstractionTuple tuple;
  std::string instruction;
  std::string input;
  std::string response;
  ExplanationTrace trace;
  FilterStatus filter_status;
  // Mean natural-log probability per continuation token; <= 0 when present.
  std::optional<double> plausibility;
  std::optional<int> token_count;

  bool operator==(const CandidateExample&) const = default;
};

enum class SourceTag { Abstraction, General };

std::string_view to_string(SourceTag tag);
SourceTag source_tag_from_string(std::string_view text);

// Final training unit, Alpaca-compatible.
struct InstructionRecord {
  std::string instruction;
  std::string input;  // may be empty
  std::string output;
  SourceTag source_tag = SourceTag::Abstraction;

  bool operator==(const InstructionRecord&) const = default;
};

}  // namespace absinstruct
