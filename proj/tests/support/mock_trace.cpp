#include "mock_trace.hpp"

#include <cctype>

#include "absinstruct/rng.hpp"
#include "absinstruct/sha256.hpp"

namespace testutil::mockref {

namespace {

using absinstruct::Rng;

uint64_t mixed_hash(const std::string& text) { return Rng(absinstruct::fnv1a64(text)).next(); }

double hash_unit(const std::string& text) {
  return static_cast<double>(mixed_hash(text) >> 11) * 0x1.0p-53;
}

bool extract_between(const std::string& text, const std::string& after, const std::string& before,
                     std::string* out) {
  size_t start = text.find(after);
  if (start == std::string::npos) return false;
  start += after.size();
  size_t end = text.find(before, start);
  if (end == std::string::npos) return false;
  *out = text.substr(start, end - start);
  return true;
}

const char* meaning_filler(const std::string& salt, const std::string& prompt) {
  static const char* kFillers[] = {
      "a specific kind of thing encountered in everyday situations",
      "a particular member of a much broader category",
      "an action or object with a narrow, concrete sense",
      "a familiar element of common experience",
      "a term whose sense is tied to one concrete situation",
      "a notion that names one definite thing or act",
      "a specialized expression for a well-known idea",
      "an instance drawn from ordinary life",
  };
  uint64_t h = mixed_hash(salt + "|" + prompt);
  return kFillers[h % (sizeof(kFillers) / sizeof(kFillers[0]))];
}

std::string meaning_response(const std::string& prompt, const std::string& salt) {
  std::string cpt, ins;
  bool event = false;
  if (!extract_between(prompt, "does the meaning of the new word ",
                       " encompass the original word ", &cpt) ||
      !extract_between(prompt, " encompass the original word ", "?\nStep 1:", &ins)) {
    event = extract_between(prompt, "Can we consider ",
                            " as an abstract description of the sentence ", &cpt) &&
            extract_between(prompt, " as an abstract description of the sentence ", "?\nStep 1:",
                            &ins);
    if (!event) return {};
  }

  const std::string salted = salt + prompt;
  if (mixed_hash("garbled|" + salted) % 29 == 0)
    return "I cannot determine the meanings of these words from the given sentence.";

  const bool omit_instance = mixed_hash("omit|" + salted) % 11 == 0;
  std::string step1;
  if (event) {
    step1 = omit_instance
                ? std::string("The sentence describes ") + meaning_filler("ins", salted) + "."
                : "The sentence '" + ins + "' describes " + meaning_filler("ins", salted) + ".";
  } else {
    step1 = omit_instance ? std::string("The original word refers to ") +
                                meaning_filler("ins", salted) + "."
                          : "The original word '" + ins + "' refers to " +
                                meaning_filler("ins", salted) + ".";
  }
  std::string step2 = event ? "The abstract description '" + cpt + "' covers " +
                                  meaning_filler("cpt", salted) + "."
                            : "The new word '" + cpt + "' denotes " +
                                  meaning_filler("cpt", salted) + ".";
  const char* verdict = (mixed_hash("verdict|" + salted) & 1) ? "Yes." : "No.";
  return "Step 1: " + step1 + "\nStep 2: " + step2 + "\nStep 3: " + verdict;
}

}  // namespace

std::string completion(const std::string& prompt, int sample_index) {
  const std::string salt = sample_index == 0 ? "" : "#s" + std::to_string(sample_index);
  std::string meaning = meaning_response(prompt, salt);
  if (!meaning.empty()) return meaning;
  if (prompt.find("\"Yes\" or \"No\"") != std::string::npos ||
      prompt.find("is valid or not") != std::string::npos) {
    return (mixed_hash("verdict|" + salt + prompt) & 1) ? "Yes." : "No.";
  }
  return "Mock reply " + absinstruct::sha256_hex(salt + prompt).substr(0, 12) + ".";
}

namespace {

struct TokenizedPrompt {
  std::vector<std::string> tokens;
  std::vector<size_t> offsets;
};

TokenizedPrompt whitespace_tokens(const std::string& prompt) {
  TokenizedPrompt out;
  size_t i = 0;
  while (i < prompt.size()) {
    while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
    if (i >= prompt.size()) break;
    size_t start = i;
    while (i < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
    out.tokens.push_back(prompt.substr(start, i - start));
    out.offsets.push_back(start);
  }
  return out;
}

std::vector<double> continuation_logprobs(const std::string& context,
                                          const std::string& continuation) {
  const std::string prompt = context + continuation;
  const auto tokenized = whitespace_tokens(prompt);
  const std::string prompt_tag = absinstruct::sha256_hex(prompt).substr(0, 16);
  std::vector<double> kept;
  for (size_t index = 0; index < tokenized.tokens.size(); ++index) {
    if (tokenized.offsets[index] < context.size()) continue;
    // The first prompt token carries no conditioning; continuation tokens of a
    // non-empty context never sit at index 0.
    double unit =
        hash_unit(tokenized.tokens[index] + "|" + std::to_string(index) + "|" + prompt_tag);
    kept.push_back(-0.05 - 2.25 * unit);
  }
  return kept;
}

}  // namespace

double plausibility(const std::string& context, const std::string& continuation) {
  const auto logprobs = continuation_logprobs(context, continuation);
  double sum = 0.0;
  for (double lp : logprobs) sum += lp;
  return sum / static_cast<double>(logprobs.size());
}

long continuation_token_count(const std::string& context, const std::string& continuation) {
  return static_cast<long>(continuation_logprobs(context, continuation).size());
}

ParsedTrace parse_steps(const std::string& text) {
  ParsedTrace parsed;
  const std::string step1 = "Step 1:";
  const std::string step2 = "Step 2:";
  const std::string step3 = "Step 3:";
  size_t p1 = text.find(step1);
  size_t p2 = text.find(step2);
  size_t p3 = text.find(step3);
  auto trim = [](std::string s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    size_t e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  if (p1 != std::string::npos && p2 != std::string::npos && p1 < p2)
    parsed.instance_meaning = trim(text.substr(p1 + step1.size(), p2 - p1 - step1.size()));
  if (p2 != std::string::npos) {
    size_t end = p3 != std::string::npos && p3 > p2 ? p3 : text.size();
    parsed.concept_meaning = trim(text.substr(p2 + step2.size(), end - p2 - step2.size()));
  }
  if (p3 != std::string::npos) {
    std::string verdict = trim(text.substr(p3 + step3.size()));
    std::string lower;
    for (char c : verdict) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower.rfind("yes", 0) == 0)
      parsed.predicted_label = 1;
    else if (lower.rfind("no", 0) == 0)
      parsed.predicted_label = 0;
  }
  parsed.parsed = !parsed.instance_meaning.empty() && !parsed.concept_meaning.empty();
  return parsed;
}

}  // namespace testutil::mockref
