#include "absinstruct/pipeline.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

#include "absinstruct/client.hpp"
#include "absinstruct/curation.hpp"
#include "absinstruct/error.hpp"
#include "absinstruct/jsonl.hpp"
#include "absinstruct/prompts.hpp"
#include "absinstruct/rng.hpp"

namespace absinstruct::pipeline {

namespace {

using nlohmann::json;

std::string iso_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

json counts_to_json(const StageCounts& counts) {
  json j = json::object();
  for (const auto& [group, counters] : counts) {
    json g = json::object();
    for (const auto& [name, value] : counters) g[name] = value;
    j[group] = std::move(g);
  }
  return j;
}

json load_manifest(const std::string& out_dir) {
  std::ifstream in(manifest_path(out_dir));
  if (!in) return json(nullptr);
  try {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return json::parse(buffer.str());
  } catch (const json::exception&) {
    return json(nullptr);  // unreadable manifests are rebuilt from scratch
  }
}

void write_manifest(const std::string& out_dir, const json& manifest) {
  std::filesystem::create_directories(out_dir);
  const std::string path = manifest_path(out_dir);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << manifest.dump(2) << '\n';
}

}  // namespace

void record_stage(const PipelineConfig& config, const std::string& out_dir,
                  const StageResult& result) {
  json manifest = load_manifest(out_dir);
  if (!manifest.is_object()) {
    manifest = json{{"stages", json::object()}, {"started_at", iso_utc_now()}};
  }
  manifest["config"] = json::parse(to_json_text(config, 0));
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.random_seed;
  manifest["status"] = "ok";
  manifest["failure_stage"] = nullptr;
  manifest.erase("error");
  if (!manifest.contains("stages") || !manifest["stages"].is_object())
    manifest["stages"] = json::object();
  manifest["stages"][result.stage] = counts_to_json(result.counts);
  manifest["finished_at"] = iso_utc_now();
  write_manifest(out_dir, manifest);
}

namespace {

void record_failure(const PipelineConfig& config, const std::string& out_dir,
                    const std::string& stage, const std::string& what) {
  json manifest = load_manifest(out_dir);
  if (!manifest.is_object()) {
    manifest = json{{"stages", json::object()}, {"started_at", iso_utc_now()}};
  }
  manifest["config"] = json::parse(to_json_text(config, 0));
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.random_seed;
  manifest["status"] = "failed";
  manifest["failure_stage"] = stage;
  manifest["error"] = what;
  manifest["finished_at"] = iso_utc_now();
  write_manifest(out_dir, manifest);
}

ClientOptions client_options(const PipelineConfig& config, const std::string& endpoint) {
  ClientOptions options;
  options.endpoint = endpoint;
  options.cache_dir = config.cache_dir;
  options.max_retries = config.max_retries;
  options.retry_backoff_ms = config.retry_backoff_ms;
  return options;
}

std::vector<CandidateExample> load_stage_candidates(const std::string& out_dir,
                                                    const std::string& stage, Relation relation) {
  return jsonl::load_candidates(stage_file(out_dir, stage, relation));
}

}  // namespace

std::string stage_file(const std::string& out_dir, const std::string& stage, Relation relation) {
  return out_dir + "/" + stage + "/" + std::string(to_string(relation)) + ".jsonl";
}

std::string records_path(const std::string& out_dir) { return out_dir + "/selected/records.jsonl"; }

std::string dataset_path(const std::string& out_dir) { return out_dir + "/dataset.jsonl"; }

std::string manifest_path(const std::string& out_dir) { return out_dir + "/manifest.json"; }

StageResult build_pool(const PipelineConfig& config, const std::string& tuples_path,
                       const std::string& out_dir) {
  const auto all = jsonl::load_tuples(tuples_path);
  StageResult result{"pool", {}};
  const size_t half = static_cast<size_t>(config.pool_size_per_relation) / 2;
  const size_t odd = static_cast<size_t>(config.pool_size_per_relation) % 2;

  for (Relation relation : kAllRelations) {
    std::vector<AbstractionTuple> positives;
    std::vector<AbstractionTuple> negatives;
    for (const auto& tuple : all) {
      if (tuple.relation != relation) continue;
      (tuple.label == 1 ? positives : negatives).push_back(tuple);
    }
    // An odd pool size gives the extra slot to the positive side.
    const size_t want_pos = half + odd;
    const size_t want_neg = half;
    const std::string name(to_string(relation));
    if (positives.size() < want_pos)
      throw Error(name + ": need " + std::to_string(want_pos) + " label-1 tuples, have " +
                  std::to_string(positives.size()));
    if (negatives.size() < want_neg)
      throw Error(name + ": need " + std::to_string(want_neg) + " label-0 tuples, have " +
                  std::to_string(negatives.size()));

    std::vector<AbstractionTuple> pool;
    pool.reserve(want_pos + want_neg);
    {
      Rng rng(derive_seed(config.random_seed, "pool-label1|" + name));
      for (size_t i : sample_indices(positives.size(), want_pos, rng))
        pool.push_back(positives[i]);
    }
    {
      Rng rng(derive_seed(config.random_seed, "pool-label0|" + name));
      for (size_t i : sample_indices(negatives.size(), want_neg, rng))
        pool.push_back(negatives[i]);
    }
    Rng order_rng(derive_seed(config.random_seed, "pool-order|" + name));
    shuffle(pool, order_rng);

    jsonl::write_tuples(pool, stage_file(out_dir, "pool", relation));
    result.counts[name] = {{"in", static_cast<long>(positives.size() + negatives.size())},
                           {"out", static_cast<long>(pool.size())}};
  }
  record_stage(config, out_dir, result);
  return result;
}

StageResult collect_traces(const PipelineConfig& config, const std::string& out_dir) {
  StageResult result{"traces", {}};
  std::unique_ptr<ServiceClient> client;
  if (config.collect_traces)
    client = std::make_unique<ServiceClient>(
        client_options(config, config.generator_endpoint));

  for (Relation relation : kAllRelations) {
    const auto pool = jsonl::load_tuples(stage_file(out_dir, "pool", relation));
    const std::string instruction = prompts::render_instruction(relation, config.prompt_style);

    auto candidates = parallel_map(pool, config.max_concurrency, [&](const AbstractionTuple& tuple) {
      CandidateExample candidate;
      candidate.tuple = tuple;
      candidate.instruction = instruction;
      candidate.input = prompts::render_input(tuple);
      if (config.collect_traces) {
        GenerationRequest request;
        request.prompt = prompts::render_meaning_prompt(tuple);
        request.temperature = config.trace_temperature;
        request.num_samples = 1;
        request.max_tokens = config.trace_max_tokens;
        request.model_id = config.generator_model;
        const auto texts = client->generate(request);
        candidate.trace = curation::parse_trace(texts.at(0), tuple);
      }
      if (config.prompt_style == prompts::PromptStyle::TwoStep) {
        if (candidate.trace.parsed())
          candidate.response = prompts::render_response(tuple, candidate.trace);
      } else {
        candidate.response = prompts::render_vanilla_response(tuple.label);
      }
      return candidate;
    });

    long unparsed = 0;
    for (const auto& candidate : candidates)
      if (config.collect_traces && !candidate.trace.parsed()) ++unparsed;

    jsonl::write_candidates(candidates, stage_file(out_dir, "traces", relation));
    result.counts[std::string(to_string(relation))] = {
        {"in", static_cast<long>(pool.size())},
        {"unparsed", unparsed},
        {"out", static_cast<long>(candidates.size())}};
  }
  record_stage(config, out_dir, result);
  return result;
}

StageResult apply_filters(const PipelineConfig& config, const std::string& out_dir) {
  StageResult result{"filter", {}};
  for (Relation relation : kAllRelations) {
    auto candidates = load_stage_candidates(out_dir, "traces", relation);
    const long in_count = static_cast<long>(candidates.size());

    long dropped_unparsed = 0;
    long dropped_prediction = 0;
    long dropped_keyword = 0;
    long dropped_diversity = 0;

    std::vector<CandidateExample> alive;
    alive.reserve(candidates.size());
    for (auto& candidate : candidates) {
      // A two-step response cannot be rendered from an unparsed trace, so
      // those candidates are unusable no matter which filters are enabled.
      if (config.prompt_style == prompts::PromptStyle::TwoStep && !candidate.trace.parsed()) {
        ++dropped_unparsed;
        continue;
      }
      if (config.enable_prediction_filter) {
        const auto verdict = curation::prediction_filter(candidate.trace, candidate.tuple.label);
        candidate.filter_status.prediction = verdict.passed ? VerdictState::Pass : VerdictState::Fail;
        if (!verdict.passed) {
          if (candidate.filter_status.detail.empty())
            candidate.filter_status.detail = verdict.detail;
          ++dropped_prediction;
          continue;
        }
      }
      if (config.enable_keyword_filter) {
        const auto verdict = curation::keyword_filter(candidate.trace, candidate.tuple);
        candidate.filter_status.keyword = verdict.passed ? VerdictState::Pass : VerdictState::Fail;
        if (!verdict.passed) {
          if (candidate.filter_status.detail.empty())
            candidate.filter_status.detail = verdict.detail;
          ++dropped_keyword;
          continue;
        }
      }
      alive.push_back(std::move(candidate));
    }

    if (config.enable_diversity_filter) {
      auto annotated = curation::annotate_diversity(std::move(alive), config.diversity_threshold);
      alive.clear();
      for (auto& candidate : annotated) {
        if (candidate.filter_status.diversity == VerdictState::Pass) {
          alive.push_back(std::move(candidate));
        } else {
          ++dropped_diversity;
        }
      }
    }

    jsonl::write_candidates(alive, stage_file(out_dir, "filtered", relation));
    result.counts[std::string(to_string(relation))] = {
        {"in", in_count},
        {"dropped_unparsed", dropped_unparsed},
        {"dropped_prediction", dropped_prediction},
        {"dropped_keyword", dropped_keyword},
        {"dropped_diversity", dropped_diversity},
        {"out", static_cast<long>(alive.size())}};
  }
  record_stage(config, out_dir, result);
  return result;
}

StageResult score_candidates(const PipelineConfig& config, const std::string& out_dir) {
  StageResult result{"score", {}};
  std::unique_ptr<ServiceClient> client;
  if (config.plausibility_mode != PlausibilityMode::Random)
    client = std::make_unique<ServiceClient>(client_options(config, config.scorer_endpoint));

  for (Relation relation : kAllRelations) {
    auto candidates = load_stage_candidates(out_dir, "filtered", relation);
    long scored = 0;
    if (client) {
      candidates =
          parallel_map(candidates, config.max_concurrency, [&](const CandidateExample& input) {
            CandidateExample candidate = input;
            ScoreRequest request;
            request.model_id = config.scorer_model;
            if (config.plausibility_mode == PlausibilityMode::Input) {
              request.context = prompts::render_training_prompt(candidate.instruction, "");
              request.continuation = " " + candidate.input;
            } else {
              request.context =
                  prompts::render_training_prompt(candidate.instruction, candidate.input);
              request.continuation = " " + candidate.response;
            }
            const auto score = client->score(request);
            candidate.plausibility = curation::plausibility(score);
            candidate.token_count = score.token_count;
            return candidate;
          });
      scored = static_cast<long>(candidates.size());
    }
    jsonl::write_candidates(candidates, stage_file(out_dir, "scored", relation));
    result.counts[std::string(to_string(relation))] = {
        {"in", static_cast<long>(candidates.size())},
        {"scored", scored},
        {"out", static_cast<long>(candidates.size())}};
  }
  record_stage(config, out_dir, result);
  return result;
}

StageResult select_candidates(const PipelineConfig& config, const std::string& out_dir) {
  StageResult result{"select", {}};
  for (Relation relation : kAllRelations) {
    const auto pool = load_stage_candidates(out_dir, "scored", relation);
    const auto selected = curation::select_top_k(
        pool, config.k_per_relation, config.plausibility_mode,
        derive_seed(config.random_seed, "select|" + std::string(to_string(relation))));
    jsonl::write_candidates(selected, stage_file(out_dir, "selected", relation));
    result.counts[std::string(to_string(relation))] = {
        {"in", static_cast<long>(pool.size())}, {"out", static_cast<long>(selected.size())}};
  }
  record_stage(config, out_dir, result);
  return result;
}

StageResult render_dataset(const PipelineConfig& config, const std::string& out_dir) {
  std::vector<InstructionRecord> records;
  for (Relation relation : kAllRelations) {
    for (const auto& candidate : load_stage_candidates(out_dir, "selected", relation)) {
      InstructionRecord record;
      record.instruction = candidate.instruction;
      record.input = candidate.input;
      record.output = candidate.response;
      record.source_tag = SourceTag::Abstraction;
      records.push_back(std::move(record));
    }
  }
  jsonl::write_records(records, records_path(out_dir));
  StageResult result{"records", {{"abstraction", {{"out", static_cast<long>(records.size())}}}}};
  record_stage(config, out_dir, result);
  return result;
}

StageResult mix_into_dataset(const PipelineConfig& config, const std::string& general_path,
                             const std::string& out_dir) {
  auto abstraction = jsonl::load_records(records_path(out_dir));
  for (auto& record : abstraction) record.source_tag = SourceTag::Abstraction;
  auto general = jsonl::load_records(general_path);

  const long n_abs = static_cast<long>(abstraction.size());
  const long n_gen = static_cast<long>(general.size());
  const auto mixed = curation::mix_datasets(std::move(abstraction), std::move(general),
                                            derive_seed(config.random_seed, "mix"));
  jsonl::write_records(mixed, dataset_path(out_dir));
  StageResult result{
      "mix",
      {{"dataset",
        {{"abstraction", n_abs}, {"general", n_gen}, {"out", static_cast<long>(mixed.size())}}}}};
  record_stage(config, out_dir, result);
  return result;
}

void run_pipeline(const PipelineConfig& config, const std::string& tuples_path,
                  const std::string& general_path, const std::string& out_dir) {
  validate(config);
  std::string stage = "pool";
  try {
    build_pool(config, tuples_path, out_dir);
    stage = "traces";
    collect_traces(config, out_dir);
    stage = "filter";
    apply_filters(config, out_dir);
    stage = "score";
    score_candidates(config, out_dir);
    stage = "select";
    select_candidates(config, out_dir);
    stage = "records";
    render_dataset(config, out_dir);
    stage = "mix";
    mix_into_dataset(config, general_path, out_dir);
  } catch (const std::exception& e) {
    record_failure(config, out_dir, stage, e.what());
    throw;
  }
}

}  // namespace absinstruct::pipeline
