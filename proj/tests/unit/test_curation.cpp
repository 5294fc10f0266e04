#include <map>
#include <set>
#include <string>
#include <vector>

#include "absinstruct/curation.hpp"
#include "absinstruct/error.hpp"
#include "absinstruct/jsonl.hpp"
#include "absinstruct/metrics.hpp"
#include "doctest.h"
#include "json.hpp"
#include "pinned.hpp"
#include "test_util.hpp"

using absinstruct::AbstractionTuple;
using absinstruct::CandidateExample;
using absinstruct::ConfigError;
using absinstruct::Error;
using absinstruct::ExplanationTrace;
using absinstruct::InstructionRecord;
using absinstruct::PlausibilityMode;
using absinstruct::ScoreResult;
using absinstruct::VerdictState;
namespace curation = absinstruct::curation;
namespace pinned = testutil::pinned;

namespace {

ExplanationTrace parse(const std::string& raw) {
  return curation::parse_trace(raw, pinned::noun_tuple());
}

CandidateExample candidate_with_input(const std::string& input, int label = 1) {
  CandidateExample candidate;
  candidate.tuple = label == 1 ? pinned::noun_tuple() : pinned::event_tuple();
  candidate.input = input;
  return candidate;
}

CandidateExample scored_candidate(int label, double plausibility) {
  CandidateExample candidate;
  candidate.tuple = label == 1 ? pinned::noun_tuple() : pinned::event_tuple();
  candidate.plausibility = plausibility;
  return candidate;
}

}  // namespace

TEST_CASE("parse_trace splits three steps and trims segments") {
  auto trace = parse("Step 1: first meaning here.\nStep 2:  second meaning.  \nStep 3: Yes.");
  CHECK(trace.parsed());
  CHECK(trace.instance_meaning == "first meaning here.");
  CHECK(trace.concept_meaning == "second meaning.");
  CHECK(trace.predicted_label == std::optional<int>(1));
  CHECK(trace.raw_generation.substr(0, 6) == "Step 1");
}

TEST_CASE("parse_trace accepts compact and oddly spaced markers") {
  auto compact = parse("Step1: a\nStep2: b\nStep3: No.");
  CHECK(compact.parsed());
  CHECK(compact.instance_meaning == "a");
  CHECK(compact.concept_meaning == "b");
  CHECK(compact.predicted_label == std::optional<int>(0));

  auto spaced = parse("step 1 : alpha\nSTEP 2\t: beta\nStep 3 : Certainly, yes!");
  CHECK(spaced.parsed());
  CHECK(spaced.instance_meaning == "alpha");
  CHECK(spaced.concept_meaning == "beta");
  CHECK(spaced.predicted_label == std::optional<int>(1));

  auto inline_markers = parse("Step 1: alpha Step 2: beta Step 3: yes");
  CHECK(inline_markers.instance_meaning == "alpha");
  CHECK(inline_markers.concept_meaning == "beta");
  CHECK(inline_markers.predicted_label == std::optional<int>(1));
}

TEST_CASE("parse_trace keeps the first occurrence of each step") {
  auto trace = parse(
      "Step 1: the real meaning\nStep 2: the concept meaning\n"
      "Step 1: a later restatement\nStep 3: No.\nStep 3: Yes.");
  CHECK(trace.instance_meaning == "the real meaning");
  CHECK(trace.concept_meaning == "the concept meaning");
  CHECK(trace.predicted_label == std::optional<int>(0));
}

TEST_CASE("parse_trace treats malformed generations as unparsed data") {
  auto garbled = parse("I cannot determine the meanings of these words from the given sentence.");
  CHECK_FALSE(garbled.parsed());
  CHECK_FALSE(garbled.predicted_label.has_value());
  CHECK(garbled.raw_generation ==
        "I cannot determine the meanings of these words from the given sentence.");

  auto missing_step = parse("Step 1: only the instance meaning.\nStep 3: Yes.");
  CHECK_FALSE(missing_step.parsed());
  CHECK(missing_step.instance_meaning == "only the instance meaning.");
  CHECK(missing_step.concept_meaning.empty());
  CHECK(missing_step.predicted_label == std::optional<int>(1));

  auto no_verdict = parse("Step 1: a\nStep 2: b\nStep 3: unclear, possibly.");
  CHECK(no_verdict.parsed());
  CHECK_FALSE(no_verdict.predicted_label.has_value());

  CHECK_FALSE(parse("Step 4: out of range\nStep 1 without a colon").parsed());
}

TEST_CASE("parse_trace takes the first standalone yes or no of the verdict") {
  CHECK(parse("Step 1: a\nStep 2: b\nStep 3: No, though some would say yes.").predicted_label ==
        std::optional<int>(0));
  CHECK(parse("Step 1: a\nStep 2: b\nStep 3: Eyes and nose aside, yes.").predicted_label ==
        std::optional<int>(1));
}

TEST_CASE("prediction filter compares the trace verdict to the gold label") {
  ExplanationTrace trace = pinned::noun_trace();
  auto pass = curation::prediction_filter(trace, 1);
  CHECK(pass.filter_name == "prediction");
  CHECK(pass.passed);
  CHECK(pass.detail.empty());

  auto fail = curation::prediction_filter(trace, 0);
  CHECK_FALSE(fail.passed);
  CHECK(fail.detail == "predicted 1, gold 0");

  ExplanationTrace unparsed;
  unparsed.raw_generation = "nonsense";
  auto missing = curation::prediction_filter(unparsed, 1);
  CHECK_FALSE(missing.passed);
  CHECK(missing.detail == "unparsed prediction");
}

TEST_CASE("keyword filter needs both surface forms in the meanings") {
  AbstractionTuple tuple = pinned::noun_tuple();

  ExplanationTrace good;
  good.instance_meaning = "A LABRADOR\n  RETRIEVER is a friendly breed.";
  good.concept_meaning = "A Dog is a domesticated mammal.";
  auto pass = curation::keyword_filter(good, tuple);
  CHECK(pass.filter_name == "keyword");
  CHECK(pass.passed);

  ExplanationTrace missing_concept;
  missing_concept.instance_meaning = "A Labrador Retriever is a friendly breed.";
  missing_concept.concept_meaning = "A canine companion of humans.";
  auto fail_concept = curation::keyword_filter(missing_concept, tuple);
  CHECK_FALSE(fail_concept.passed);
  CHECK(fail_concept.detail == "trace omits \"dog\"");

  ExplanationTrace missing_instance;
  missing_instance.instance_meaning = "A popular retriever breed.";
  missing_instance.concept_meaning = "A dog is a domesticated mammal.";
  auto fail_instance = curation::keyword_filter(missing_instance, tuple);
  CHECK_FALSE(fail_instance.passed);
  CHECK(fail_instance.detail == "trace omits \"Labrador Retriever\"");

  ExplanationTrace missing_both;
  missing_both.instance_meaning = "Something vague.";
  missing_both.concept_meaning = "Something vaguer.";
  auto fail_both = curation::keyword_filter(missing_both, tuple);
  CHECK_FALSE(fail_both.passed);
  CHECK(fail_both.detail == "trace omits \"Labrador Retriever\" and \"dog\"");

  // either meaning may carry either keyword; matching spans the concatenation
  ExplanationTrace swapped;
  swapped.instance_meaning = "It names a kind of dog.";
  swapped.concept_meaning = "Specifically the labrador retriever lineage.";
  CHECK(curation::keyword_filter(swapped, tuple).passed);
}

TEST_CASE("checked-in filter cases behave as recorded") {
  auto text = testutil::slurp(testutil::fixtures_dir() / "filter_cases.json");
  auto doc = nlohmann::json::parse(text);
  REQUIRE(doc.at("cases").size() >= 5);
  for (const auto& item : doc.at("cases")) {
    INFO("case ", item.at("name").get<std::string>());
    AbstractionTuple tuple;
    const auto& jt = item.at("tuple");
    tuple.head_event = jt.at("head_event").get<std::string>();
    tuple.relation = absinstruct::relation_from_string(jt.at("relation").get<std::string>());
    tuple.tail_event = jt.at("tail_event").get<std::string>();
    tuple.instance = jt.at("instance").get<std::string>();
    tuple.concept_term = jt.at("concept").get<std::string>();
    tuple.label = jt.at("label").get<int>();

    const auto& expected = item.at("expected");
    auto trace = curation::parse_trace(item.at("raw_generation").get<std::string>(), tuple);
    CHECK(trace.parsed() == expected.at("parsed").get<bool>());
    if (expected.contains("predicted_label") && !expected.at("predicted_label").is_null())
      CHECK(trace.predicted_label == std::optional<int>(expected.at("predicted_label").get<int>()));

    auto prediction = curation::prediction_filter(trace, tuple.label);
    CHECK(prediction.passed == expected.at("prediction_pass").get<bool>());

    auto keyword = curation::keyword_filter(trace, tuple);
    CHECK(keyword.passed == expected.at("keyword_pass").get<bool>());

    if (expected.contains("detail_mentions")) {
      std::string details = prediction.detail + " | " + keyword.detail;
      for (const auto& needle : expected.at("detail_mentions"))
        CHECK(details.find(needle.get<std::string>()) != std::string::npos);
    }
  }
}

TEST_CASE("diversity filter keeps a candidate only when strictly under the threshold") {
  // ten tokens each, sharing exactly a seven-token prefix: similarity 2*7/20 = 0.7
  auto base = candidate_with_input(
      "alpha bravo charlie delta echo foxtrot golf hotel india juliet");
  auto boundary = candidate_with_input(
      "alpha bravo charlie delta echo foxtrot golf papa quebec romeo");

  auto at_threshold = curation::diversity_filter({base, boundary}, 0.7);
  REQUIRE(at_threshold.size() == 1);
  CHECK(at_threshold[0].input == base.input);

  auto above_threshold = curation::diversity_filter({base, boundary}, 0.7001);
  CHECK(above_threshold.size() == 2);

  auto annotated = curation::annotate_diversity({base, boundary}, 0.7);
  REQUIRE(annotated.size() == 2);
  CHECK(annotated[0].filter_status.diversity == VerdictState::Pass);
  CHECK(annotated[1].filter_status.diversity == VerdictState::Fail);
  CHECK(annotated[1].filter_status.detail.find("rouge_l 0.7000") != std::string::npos);
  CHECK(annotated[1].filter_status.detail.find("candidate 0") != std::string::npos);
}

TEST_CASE("diversity filter compares against kept candidates only") {
  // B overlaps A enough to drop; C overlaps B enough to drop but A too little,
  // so C survives precisely because B was never kept.
  auto a = candidate_with_input(
      "alpha bravo charlie delta echo foxtrot golf hotel india juliet");
  auto b = candidate_with_input("delta echo foxtrot golf hotel india juliet kilo lima");
  auto c = candidate_with_input("foxtrot golf hotel india juliet kilo lima mike november");

  CHECK(absinstruct::metrics::rouge_l(a.input, b.input) >= 0.7);
  CHECK(absinstruct::metrics::rouge_l(b.input, c.input) >= 0.7);
  CHECK(absinstruct::metrics::rouge_l(a.input, c.input) < 0.7);

  auto kept = curation::diversity_filter({a, b, c}, 0.7);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].input == a.input);
  CHECK(kept[1].input == c.input);

  auto empty_ok = curation::diversity_filter({}, 0.7);
  CHECK(empty_ok.empty());

  CHECK_THROWS_AS(curation::annotate_diversity({a}, 1.5), ConfigError);
  CHECK_THROWS_AS(curation::annotate_diversity({a}, -0.1), ConfigError);

  // threshold 0 drops everything after the first candidate; identical inputs
  // always collide at any positive threshold below 1
  auto zero = curation::diversity_filter({a, c}, 0.0);
  REQUIRE(zero.size() == 1);
  auto dupes = curation::diversity_filter({a, a, a}, 0.999);
  CHECK(dupes.size() == 1);
}

TEST_CASE("plausibility is the mean token log-probability") {
  ScoreResult score;
  score.token_logprobs = {-1.0, -2.0, -3.0};
  score.token_count = 3;
  CHECK(curation::plausibility(score) == doctest::Approx(-2.0));

  score.token_logprobs = {-0.25};
  CHECK(curation::plausibility(score) == doctest::Approx(-0.25));

  ScoreResult empty;
  CHECK_THROWS_AS(curation::plausibility(empty), Error);
}

TEST_CASE("select_top_k takes the best half per label and interleaves") {
  std::vector<CandidateExample> pool{
      scored_candidate(1, -1.0), scored_candidate(0, -0.3), scored_candidate(1, -0.5),
      scored_candidate(0, -0.9), scored_candidate(1, -2.0), scored_candidate(0, -0.1),
  };
  for (size_t i = 0; i < pool.size(); ++i) pool[i].instruction = "cand-" + std::to_string(i);

  auto selected = curation::select_top_k(pool, 4, PlausibilityMode::Response, 42);
  REQUIRE(selected.size() == 4);
  CHECK(selected[0].instruction == "cand-2");  // best positive
  CHECK(selected[1].instruction == "cand-5");  // best negative
  CHECK(selected[2].instruction == "cand-0");
  CHECK(selected[3].instruction == "cand-1");
  CHECK(selected[0].tuple.label == 1);
  CHECK(selected[1].tuple.label == 0);
  CHECK(selected[2].tuple.label == 1);
  CHECK(selected[3].tuple.label == 0);

  auto via_input_mode = curation::select_top_k(pool, 4, PlausibilityMode::Input, 42);
  CHECK(via_input_mode == selected);
}

TEST_CASE("select_top_k breaks plausibility ties on pool order") {
  std::vector<CandidateExample> pool;
  for (int i = 0; i < 8; ++i) {
    auto candidate = scored_candidate(i % 2, -1.0);
    candidate.instruction = "cand-" + std::to_string(i);
    pool.push_back(candidate);
  }
  auto selected = curation::select_top_k(pool, 4, PlausibilityMode::Response, 42);
  REQUIRE(selected.size() == 4);
  CHECK(selected[0].instruction == "cand-1");  // labels alternate 0,1,0,1,...
  CHECK(selected[1].instruction == "cand-0");
  CHECK(selected[2].instruction == "cand-3");
  CHECK(selected[3].instruction == "cand-2");
}

TEST_CASE("select_top_k validates its inputs") {
  std::vector<CandidateExample> pool{scored_candidate(1, -1.0), scored_candidate(0, -1.0)};
  CHECK_THROWS_AS(curation::select_top_k(pool, 3, PlausibilityMode::Response, 42), ConfigError);
  CHECK_THROWS_AS(curation::select_top_k(pool, 0, PlausibilityMode::Response, 42), ConfigError);
  CHECK_THROWS_AS(curation::select_top_k(pool, 4, PlausibilityMode::Response, 42), Error);

  std::vector<CandidateExample> unscored{candidate_with_input("x", 1),
                                         candidate_with_input("y", 0)};
  CHECK_THROWS_AS(curation::select_top_k(unscored, 2, PlausibilityMode::Response, 42), Error);
  CHECK_NOTHROW(curation::select_top_k(unscored, 2, PlausibilityMode::Random, 42));
}

TEST_CASE("random selection is balanced, seed-deterministic, and ignores scores") {
  std::vector<CandidateExample> pool;
  for (int i = 0; i < 40; ++i) {
    auto candidate = candidate_with_input("input " + std::to_string(i), i % 2);
    candidate.instruction = "cand-" + std::to_string(i);
    pool.push_back(candidate);
  }
  auto first = curation::select_top_k(pool, 10, PlausibilityMode::Random, 7);
  auto second = curation::select_top_k(pool, 10, PlausibilityMode::Random, 7);
  CHECK(first == second);
  REQUIRE(first.size() == 10);
  for (size_t i = 0; i < first.size(); ++i) CHECK(first[i].tuple.label == (i % 2 == 0 ? 1 : 0));

  auto other_seed = curation::select_top_k(pool, 10, PlausibilityMode::Random, 8);
  CHECK(first != other_seed);

  std::map<std::string, int> seen;
  for (const auto& candidate : first) ++seen[candidate.instruction];
  CHECK(seen.size() == 10);  // no duplicates
}

TEST_CASE("mix_datasets shuffles the union deterministically") {
  std::vector<InstructionRecord> abstraction;
  std::vector<InstructionRecord> general;
  for (int i = 0; i < 12; ++i) {
    InstructionRecord record;
    record.instruction = "abs-" + std::to_string(i);
    record.source_tag = absinstruct::SourceTag::Abstraction;
    abstraction.push_back(record);
    record.instruction = "gen-" + std::to_string(i);
    record.source_tag = absinstruct::SourceTag::General;
    general.push_back(record);
  }

  auto mixed = curation::mix_datasets(abstraction, general, 99);
  auto again = curation::mix_datasets(abstraction, general, 99);
  CHECK(mixed == again);
  REQUIRE(mixed.size() == 24);

  std::multiset<std::string> expected;
  std::multiset<std::string> actual;
  for (const auto& record : abstraction) expected.insert(record.instruction);
  for (const auto& record : general) expected.insert(record.instruction);
  for (const auto& record : mixed) actual.insert(record.instruction);
  CHECK(expected == actual);

  auto different = curation::mix_datasets(abstraction, general, 100);
  CHECK(different != mixed);

  bool interleaved = false;
  for (size_t i = 0; i + 1 < mixed.size() && !interleaved; ++i)
    if (mixed[i].source_tag != mixed[i + 1].source_tag) interleaved = true;
  CHECK(interleaved);

  CHECK(curation::mix_datasets({}, {}, 1).empty());
}
