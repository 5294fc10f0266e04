#include "absinstruct/types.hpp"

#include <algorithm>
#include <cctype>

#include "absinstruct/error.hpp"

namespace absinstruct {
namespace {

std::string trimmed(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

}  // namespace

std::string_view to_string(Relation relation) {
  switch (relation) {
    case Relation::NounEntail:
      return "noun-entail";
    case Relation::VerbEntail:
      return "verb-entail";
    case Relation::EventEntail:
      return "event-entail";
  }
  return "noun-entail";
}

Relation relation_from_string(std::string_view text) {
  if (text == "noun-entail") return Relation::NounEntail;
  if (text == "verb-entail") return Relation::VerbEntail;
  if (text == "event-entail") return Relation::EventEntail;
  throw SchemaError("unknown relation string: '" + std::string(text) + "'");
}

void validate(const AbstractionTuple& tuple) {
  if (trimmed(tuple.head_event).empty()) throw SchemaError("head_event is empty");
  if (trimmed(tuple.instance).empty()) throw SchemaError("instance is empty");
  if (trimmed(tuple.concept_term).empty()) throw SchemaError("concept is empty");
  if (tuple.label != 0 && tuple.label != 1)
    throw SchemaError("label must be 0 or 1, got " + std::to_string(tuple.label));
  if (tuple.relation == Relation::EventEntail && tuple.instance != tuple.head_event)
    throw SchemaError("event-entail record whose instance differs from its head event: '" +
                      tuple.instance + "' vs '" + tuple.head_event + "'");
}

std::string_view to_string(VerdictState state) {
  switch (state) {
    case VerdictState::NotRun:
      return "not-run";
    case VerdictState::Pass:
      return "pass";
    case VerdictState::Fail:
      return "fail";
  }
  return "not-run";
}

VerdictState verdict_state_from_string(std::string_view text) {
  if (text == "not-run") return VerdictState::NotRun;
  if (text == "pass") return VerdictState::Pass;
  if (text == "fail") return VerdictState::Fail;
  throw SchemaError("unknown verdict state: '" + std::string(text) + "'");
}

std::string_view to_string(SourceTag tag) {
  return tag == SourceTag::Abstraction ? "abstraction" : "general";
}

SourceTag source_tag_from_string(std::string_view text) {
  if (text == "abstraction") return SourceTag::Abstraction;
  if (text == "general") return SourceTag::General;
  throw SchemaError("unknown source_tag: '" + std::string(text) + "'");
}

}  // namespace absinstruct
