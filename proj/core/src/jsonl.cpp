#include "absinstruct/jsonl.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

#include "absinstruct/error.hpp"

namespace absinstruct::jsonl {

namespace {

using nlohmann::json;

void for_each_line(const std::string& path,
                   const std::function<void(size_t line_no, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    try {
      fn(line_no, parsed);
    } catch (const Error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::ofstream open_for_write(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

int parse_label(const json& value) {
  if (!value.is_number_integer() && !value.is_number_unsigned())
    throw SchemaError("label must be an integer 0 or 1");
  int label = value.get<int>();
  if (label != 0 && label != 1) throw SchemaError("label must be 0 or 1");
  return label;
}

json tuple_to_json(const AbstractionTuple& t) {
  return json{{"head_event", t.head_event}, {"relation", std::string(to_string(t.relation))},
              {"tail_event", t.tail_event}, {"instance", t.instance},
              {"concept", t.concept_term},       {"label", t.label}};
}

AbstractionTuple tuple_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("record is not a JSON object");
  for (const char* key : {"head_event", "relation", "tail_event", "instance", "concept", "label"})
    if (!j.contains(key)) throw SchemaError(std::string("missing key ") + key);
  AbstractionTuple t;
  t.head_event = j.at("head_event").get<std::string>();
  t.relation = relation_from_string(j.at("relation").get<std::string>());
  t.tail_event = j.at("tail_event").get<std::string>();
  t.instance = j.at("instance").get<std::string>();
  t.concept_term = j.at("concept").get<std::string>();
  t.label = parse_label(j.at("label"));
  validate(t);
  return t;
}

json trace_to_json(const ExplanationTrace& trace) {
  json j{{"instance_meaning", trace.instance_meaning},
         {"concept_meaning", trace.concept_meaning},
         {"raw_generation", trace.raw_generation}};
  j["predicted_label"] = trace.predicted_label ? json(*trace.predicted_label) : json(nullptr);
  return j;
}

ExplanationTrace trace_from_json(const json& j) {
  ExplanationTrace trace;
  trace.instance_meaning = j.value("instance_meaning", "");
  trace.concept_meaning = j.value("concept_meaning", "");
  trace.raw_generation = j.value("raw_generation", "");
  if (j.contains("predicted_label") && !j.at("predicted_label").is_null())
    trace.predicted_label = parse_label(j.at("predicted_label"));
  return trace;
}

json candidate_to_json(const CandidateExample& c) {
  json j{{"tuple", tuple_to_json(c.tuple)},
         {"instruction", c.instruction},
         {"input", c.input},
         {"response", c.response},
         {"trace", trace_to_json(c.trace)},
         {"filter_status",
          json{{"prediction", std::string(to_string(c.filter_status.prediction))},
               {"keyword", std::string(to_string(c.filter_status.keyword))},
               {"diversity", std::string(to_string(c.filter_status.diversity))},
               {"detail", c.filter_status.detail}}}};
  j["plausibility"] = c.plausibility ? json(*c.plausibility) : json(nullptr);
  j["token_count"] = c.token_count ? json(*c.token_count) : json(nullptr);
  return j;
}

CandidateExample candidate_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("record is not a JSON object");
  CandidateExample c;
  c.tuple = tuple_from_json(j.at("tuple"));
  c.instruction = j.value("instruction", "");
  c.input = j.value("input", "");
  c.response = j.value("response", "");
  if (j.contains("trace")) c.trace = trace_from_json(j.at("trace"));
  if (j.contains("filter_status")) {
    const json& fs = j.at("filter_status");
    c.filter_status.prediction = verdict_state_from_string(fs.value("prediction", "not-run"));
    c.filter_status.keyword = verdict_state_from_string(fs.value("keyword", "not-run"));
    c.filter_status.diversity = verdict_state_from_string(fs.value("diversity", "not-run"));
    c.filter_status.detail = fs.value("detail", "");
  }
  if (j.contains("plausibility") && !j.at("plausibility").is_null()) {
    c.plausibility = j.at("plausibility").get<double>();
    if (*c.plausibility > 0.0) throw SchemaError("plausibility must be <= 0 (log domain)");
  }
  if (j.contains("token_count") && !j.at("token_count").is_null()) {
    c.token_count = j.at("token_count").get<int>();
    if (*c.token_count < 1) throw SchemaError("token_count must be >= 1");
  }
  return c;
}

}  // namespace

std::vector<AbstractionTuple> load_tuples(const std::string& path) {
  std::vector<AbstractionTuple> tuples;
  for_each_line(path, [&](size_t, const json& j) { tuples.push_back(tuple_from_json(j)); });
  return tuples;
}

void write_tuples(const std::vector<AbstractionTuple>& tuples, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& t : tuples) out << tuple_to_json(t).dump() << '\n';
}

std::vector<InstructionRecord> load_records(const std::string& path) {
  std::vector<InstructionRecord> records;
  for_each_line(path, [&](size_t, const json& j) {
    if (!j.is_object()) throw SchemaError("record is not a JSON object");
    for (const char* key : {"instruction", "input", "output"})
      if (!j.contains(key)) throw SchemaError(std::string("missing key ") + key);
    InstructionRecord r;
    r.instruction = j.at("instruction").get<std::string>();
    r.input = j.at("input").get<std::string>();
    r.output = j.at("output").get<std::string>();
    r.source_tag = source_tag_from_string(j.value("source_tag", "general"));
    if (r.instruction.empty()) throw SchemaError("instruction must be non-empty");
    if (r.output.empty()) throw SchemaError("output must be non-empty");
    records.push_back(std::move(r));
  });
  return records;
}

void write_records(const std::vector<InstructionRecord>& records, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& r : records) {
    json j{{"instruction", r.instruction},
           {"input", r.input},
           {"output", r.output},
           {"source_tag", std::string(to_string(r.source_tag))}};
    out << j.dump() << '\n';
  }
}

std::vector<CandidateExample> load_candidates(const std::string& path) {
  std::vector<CandidateExample> candidates;
  for_each_line(path, [&](size_t, const json& j) { candidates.push_back(candidate_from_json(j)); });
  return candidates;
}

void write_candidates(const std::vector<CandidateExample>& candidates, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& c : candidates) out << candidate_to_json(c).dump() << '\n';
}

}  // namespace absinstruct::jsonl
