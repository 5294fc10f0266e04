#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absinstruct/types.hpp"

namespace absinstruct::prompts {

// Prompt flavor for abstraction-detection examples. TwoStep carries an
// explanation trace in the response; Vanilla answers with a bare Yes/No.
enum class PromptStyle { TwoStep, Vanilla };

std::string to_string(PromptStyle style);
PromptStyle prompt_style_from_string(std::string_view text);

// Instruction text for a relation. Every output is frozen by golden fixtures;
// editing a template here must be matched by regenerating the fixture.
std::string render_instruction(Relation relation, PromptStyle style);

// Question posed about one tuple, e.g. "In the sentence {head}, does the
// meaning of {concept} encompass {instance}?". Substitution is literal.
std::string render_input(const AbstractionTuple& tuple);

// Two-step response carrying the explanation trace. Meanings are inserted
// verbatim and are expected to carry their own terminal punctuation.
// Throws SchemaError when either meaning is empty.
std::string render_response(const AbstractionTuple& tuple, const ExplanationTrace& trace);

// "Yes." / "No."
std::string render_vanilla_response(int label);

// Three-step prompt asking a generator for word/sentence meanings plus a
// final Yes/No verdict.
std::string render_meaning_prompt(const AbstractionTuple& tuple);

// Instruction/input concatenation used for training prompts and scoring
// contexts. Ends with "### Response:" and no trailing newline. Whitespace-only
// input selects the no-input variant.
std::string render_training_prompt(std::string_view instruction, std::string_view input);
std::string render_training_prompt(const InstructionRecord& record);

// Single-question prompt for zero-shot detection baselines.
std::string render_zero_shot_prompt(const AbstractionTuple& tuple);

// In-context-learning prompt: numbered answered exemplars, then the query as
// the final numbered unanswered line. Exemplars must share the query relation.
std::string render_fewshot_prompt(Relation relation,
                                  const std::vector<std::pair<AbstractionTuple, int>>& exemplars,
                                  const AbstractionTuple& query);

}  // namespace absinstruct::prompts
