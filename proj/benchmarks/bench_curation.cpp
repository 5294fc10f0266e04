#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "absinstruct/curation.hpp"
#include "absinstruct/prompts.hpp"
#include "absinstruct/rng.hpp"
#include "absinstruct/types.hpp"

namespace {

using namespace absinstruct;

const char* const kNouns[] = {"terrier", "sparrow", "oak",    "salmon", "violin",
                              "lorry",   "tulip",   "beetle", "canoe",  "sweater"};
const char* const kConcepts[] = {"animal", "bird", "tree", "fish", "instrument",
                                 "vehicle", "plant", "insect", "boat", "garment"};

std::vector<CandidateExample> make_candidates(size_t count, uint64_t seed) {
  Rng rng(seed);
  std::vector<CandidateExample> candidates;
  candidates.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const size_t pick = rng.below(std::size(kNouns));
    AbstractionTuple tuple;
    tuple.instance = kNouns[pick];
    tuple.concept_term = kConcepts[pick];
    tuple.head_event = "the " + tuple.instance + " number " + std::to_string(rng.below(1000)) +
                       " waits near the " + kNouns[rng.below(std::size(kNouns))];
    tuple.tail_event = "the " + tuple.concept_term + " waits";
    tuple.relation = Relation::NounEntail;
    tuple.label = static_cast<int>(rng.next() & 1);

    CandidateExample candidate;
    candidate.input = prompts::render_input(tuple);
    candidate.tuple = std::move(tuple);
    candidate.plausibility = -0.1 - rng.unit();
    candidates.push_back(std::move(candidate));
  }
  return candidates;
}

void BM_AnnotateDiversity(benchmark::State& state) {
  const auto candidates = make_candidates(static_cast<size_t>(state.range(0)), 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(curation::annotate_diversity(candidates, 0.7));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AnnotateDiversity)->Range(64, 1024)->Complexity();

void BM_SelectTopK(benchmark::State& state) {
  const auto pool = make_candidates(2000, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(curation::select_top_k(pool, 200, PlausibilityMode::Response, 42));
  }
}
BENCHMARK(BM_SelectTopK);

void BM_MixDatasets(benchmark::State& state) {
  std::vector<InstructionRecord> abstraction(600), general(9000);
  for (size_t i = 0; i < abstraction.size(); ++i) {
    abstraction[i] = {"instruction " + std::to_string(i), "input", "output",
                      SourceTag::Abstraction};
  }
  for (size_t i = 0; i < general.size(); ++i) {
    general[i] = {"general " + std::to_string(i), "", "output", SourceTag::General};
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(curation::mix_datasets(abstraction, general, 42));
  }
}
BENCHMARK(BM_MixDatasets);

}  // namespace

BENCHMARK_MAIN();
