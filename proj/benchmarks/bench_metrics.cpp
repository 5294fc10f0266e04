#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "absinstruct/metrics.hpp"
#include "absinstruct/rng.hpp"

namespace {

using namespace absinstruct;

const char* const kWords[] = {
    "the",     "a",        "person",  "animal",  "dog",     "cat",      "runs",    "walks",
    "eats",    "watches",  "small",   "large",   "quickly", "slowly",   "house",   "garden",
    "river",   "mountain", "reads",   "writes",  "book",    "letter",   "finds",   "loses",
    "red",     "green",    "teacher", "student", "builds",  "repairs",  "machine", "engine",
    "morning", "evening",  "cart",    "wheel",   "brings",  "carries",  "water",   "stone"};

std::string make_sentence(Rng& rng, size_t words) {
  std::string sentence;
  for (size_t i = 0; i < words; ++i) {
    if (i) sentence += ' ';
    sentence += kWords[rng.below(std::size(kWords))];
  }
  return sentence;
}

std::vector<std::string> make_sentences(size_t count, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> sentences;
  sentences.reserve(count);
  for (size_t i = 0; i < count; ++i) sentences.push_back(make_sentence(rng, 8 + rng.below(9)));
  return sentences;
}

void BM_Tokenize(benchmark::State& state) {
  const auto sentences = make_sentences(256, 1);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::tokenize(sentences[i++ % sentences.size()]));
  }
}
BENCHMARK(BM_Tokenize);

void BM_RougeL(benchmark::State& state) {
  const auto sentences = make_sentences(256, 2);
  size_t i = 0;
  for (auto _ : state) {
    const auto& a = sentences[i % sentences.size()];
    const auto& b = sentences[(i + 1) % sentences.size()];
    ++i;
    benchmark::DoNotOptimize(metrics::rouge_l(a, b));
  }
}
BENCHMARK(BM_RougeL);

void BM_Bleu2(benchmark::State& state) {
  const auto sentences = make_sentences(256, 3);
  size_t i = 0;
  for (auto _ : state) {
    const auto& a = sentences[i % sentences.size()];
    const auto& b = sentences[(i + 1) % sentences.size()];
    ++i;
    benchmark::DoNotOptimize(metrics::bleu(a, b, 2));
  }
}
BENCHMARK(BM_Bleu2);

void BM_PorterStem(benchmark::State& state) {
  const char* const samples[] = {"running",    "happiness", "relational", "conditional",
                                 "caresses",   "ponies",    "agreed",     "disability",
                                 "triplicate", "hopeful",   "electrical", "adjustment"};
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::porter_stem(samples[i++ % std::size(samples)]));
  }
}
BENCHMARK(BM_PorterStem);

void BM_Meteor(benchmark::State& state) {
  const auto sentences = make_sentences(256, 4);
  size_t i = 0;
  for (auto _ : state) {
    const auto& a = sentences[i % sentences.size()];
    const auto& b = sentences[(i + 1) % sentences.size()];
    ++i;
    benchmark::DoNotOptimize(metrics::meteor(a, b));
  }
}
BENCHMARK(BM_Meteor);

void BM_ClassificationReport(benchmark::State& state) {
  Rng rng(5);
  std::vector<int> predictions(10000), golds(10000);
  for (size_t i = 0; i < predictions.size(); ++i) {
    predictions[i] = static_cast<int>(rng.next() & 1);
    golds[i] = static_cast<int>(rng.next() & 1);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::classification_report(predictions, golds));
  }
}
BENCHMARK(BM_ClassificationReport);

}  // namespace

BENCHMARK_MAIN();
