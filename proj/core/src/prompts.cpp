#include "absinstruct/prompts.hpp"

#include <cctype>

#include "absinstruct/error.hpp"

namespace absinstruct::prompts {

namespace {

constexpr std::string_view kHypernymLead =
    "Hypernyms are words with a broad meaning, which more specific words fall under.";

std::string replace_all(std::string text, std::string_view placeholder, std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
  return text;
}

std::string substitute(std::string_view tmpl, const AbstractionTuple& tuple) {
  std::string out = replace_all(std::string(tmpl), "[head]", tuple.head_event);
  out = replace_all(std::move(out), "[cpt]", tuple.concept_term);
  return replace_all(std::move(out), "[ins]", tuple.instance);
}

bool is_blank(std::string_view text) {
  for (unsigned char c : text)
    if (!std::isspace(c)) return false;
  return true;
}

std::string two_step_instruction(Relation relation) {
  switch (relation) {
    case Relation::NounEntail:
      return std::string(kHypernymLead) +
             " Identify the hypernym of a specific noun through the following two steps: "
             "Step 1: Let's think about meanings of those words. "
             "Step 2: Provide a \"Yes\" or \"No\" response.";
    case Relation::VerbEntail:
      return std::string(kHypernymLead) +
             " Identify the hypernym of a specific verb through the following two steps: "
             "Step 1: Let's think about meanings of those words. "
             "Step 2: Provide a \"Yes\" or \"No\" response.";
    case Relation::EventEntail:
      return "Identify abstract descriptions of specific sentences through the following two "
             "steps: Step 1: Let's think about meanings of the sentence and the abstract "
             "description. Step 2: Provide a \"Yes\" or \"No\" response.";
  }
  throw Error("unknown relation");
}

std::string vanilla_instruction(Relation relation) {
  switch (relation) {
    case Relation::NounEntail:
      return "Identify the hypernym of a specific noun and provide a \"Yes\" or \"No\" response. " +
             std::string(kHypernymLead);
    case Relation::VerbEntail:
      return "Identify the hypernym of a specific verb and provide a \"Yes\" or \"No\" response. " +
             std::string(kHypernymLead);
    case Relation::EventEntail:
      return "Identify abstract descriptions of specific sentences, and provide a \"Yes\" or "
             "\"No\" response.";
  }
  throw Error("unknown relation");
}

std::string_view input_template(Relation relation) {
  if (relation == Relation::EventEntail)
    return "Can we consider [cpt] as an abstract description of the sentence [head]?";
  return "In the sentence [head], does the meaning of [cpt] encompass [ins]?";
}

std::string_view fewshot_question_template(Relation relation) {
  if (relation == Relation::EventEntail)
    return "Can we consider [cpt] as an abstract description of the sentence [head]?";
  return "In the sentence [head], is [cpt] a hypernym of [ins]?";
}

}  // namespace

std::string to_string(PromptStyle style) {
  return style == PromptStyle::TwoStep ? "two_step" : "vanilla";
}

PromptStyle prompt_style_from_string(std::string_view text) {
  if (text == "two_step") return PromptStyle::TwoStep;
  if (text == "vanilla") return PromptStyle::Vanilla;
  throw ConfigError("unknown prompt style: " + std::string(text));
}

std::string render_instruction(Relation relation, PromptStyle style) {
  return style == PromptStyle::TwoStep ? two_step_instruction(relation)
                                       : vanilla_instruction(relation);
}

std::string render_input(const AbstractionTuple& tuple) {
  return substitute(input_template(tuple.relation), tuple);
}

std::string render_response(const AbstractionTuple& tuple, const ExplanationTrace& trace) {
  if (trace.instance_meaning.empty() || trace.concept_meaning.empty())
    throw SchemaError("render_response requires both meanings");
  std::string out = "Step1: " + trace.instance_meaning + " Meanwhile, " + trace.concept_meaning +
                    " Step2: ";
  if (tuple.label == 1) {
    out += "Yes, the meaning of " + tuple.concept_term + " encompasses " + tuple.instance + ".";
  } else {
    out += "No, the meaning of " + tuple.concept_term + " does not encompass " + tuple.instance + ".";
  }
  return out;
}

std::string render_vanilla_response(int label) { return label == 1 ? "Yes." : "No."; }

std::string render_meaning_prompt(const AbstractionTuple& tuple) {
  std::string question;
  std::string step1;
  std::string step2;
  switch (tuple.relation) {
    case Relation::NounEntail:
    case Relation::VerbEntail: {
      const char* pos = tuple.relation == Relation::NounEntail ? "noun" : "verb";
      question = "Identify the hypernym of a specific " + std::string(pos) + ". " +
                 std::string(kHypernymLead) +
                 " In the sentence [head], does the meaning of the new word [cpt] encompass "
                 "the original word [ins]?";
      step1 = "Step 1: Let's think about the meaning of the original word.";
      step2 = "Step 2: Let's think about the meaning of the new word.";
      break;
    }
    case Relation::EventEntail:
      question =
          "Identify abstract descriptions of specific sentences. Can we consider [cpt] as an "
          "abstract description of the sentence [head]?";
      step1 = "Step 1: Let's think about the meaning of the sentence.";
      step2 = "Step 2: Let's think about the meaning of the abstract description.";
      break;
  }
  std::string prompt = question + "\n" + step1 + "\n" + step2 +
                       "\nStep 3: Provide a \"Yes\" or \"No\" response without other words.";
  return substitute(prompt, tuple);
}

std::string render_training_prompt(std::string_view instruction, std::string_view input) {
  if (is_blank(input)) {
    return "Below is an instruction that describes a task. Write a response that appropriately "
           "completes the request.\n\n### Instruction:\n" +
           std::string(instruction) + "\n\n### Response:";
  }
  return "Below is an instruction that describes a task, paired with an input that provides "
         "further context. Write a response that appropriately completes the request.\n\n"
         "### Instruction:\n" +
         std::string(instruction) + "\n\n### Input:\n" + std::string(input) + "\n\n### Response:";
}

std::string render_training_prompt(const InstructionRecord& record) {
  return render_training_prompt(record.instruction, record.input);
}

std::string render_zero_shot_prompt(const AbstractionTuple& tuple) {
  return vanilla_instruction(tuple.relation) + " " + render_input(tuple);
}

std::string render_fewshot_prompt(Relation relation,
                                  const std::vector<std::pair<AbstractionTuple, int>>& exemplars,
                                  const AbstractionTuple& query) {
  if (query.relation != relation)
    throw SchemaError("few-shot query relation does not match prompt relation");
  std::string prompt = relation == Relation::EventEntail
                           ? "You need to decide whether an abstract description of a specific "
                             "sentence is valid or not."
                           : std::string("You need to decide whether a hypernym of a specific ") +
                                 (relation == Relation::NounEntail ? "noun" : "verb") +
                                 " is valid or not. " + std::string(kHypernymLead);
  int line = 0;
  for (const auto& [tuple, label] : exemplars) {
    if (tuple.relation != relation)
      throw SchemaError("few-shot exemplar relation does not match prompt relation");
    prompt += "\n" + std::to_string(++line) + ". " +
              substitute(fewshot_question_template(relation), tuple) +
              (label == 1 ? " Yes." : " No.");
  }
  prompt += "\n" + std::to_string(++line) + ". " +
            substitute(fewshot_question_template(relation), query);
  return prompt;
}

}  // namespace absinstruct::prompts
