#pragma once

#include <map>
#include <string>

#include "absinstruct/config.hpp"
#include "absinstruct/types.hpp"

namespace absinstruct::pipeline {

// group ("noun-entail", "dataset", ...) -> counter ("in", "out", ...) -> value
using StageCounts = std::map<std::string, std::map<std::string, long>>;

struct StageResult {
  std::string stage;
  StageCounts counts;
};

// Conventional artifact layout under an output directory:
//   pool/<relation>.jsonl      balanced tuple sample per relation
//   traces/<relation>.jsonl    candidates with collected traces
//   filtered/<relation>.jsonl  candidates surviving the enabled filters
//   scored/<relation>.jsonl    candidates with plausibility scores
//   selected/<relation>.jsonl  balanced top-k per relation
//   selected/records.jsonl     rendered instruction records
//   dataset.jsonl              abstraction records mixed into the general corpus
//   manifest.json              config, seed, stage counts, status
std::string stage_file(const std::string& out_dir, const std::string& stage, Relation relation);
std::string records_path(const std::string& out_dir);
std::string dataset_path(const std::string& out_dir);
std::string manifest_path(const std::string& out_dir);

// Merge one stage entry into manifest.json under out_dir (creating it when
// absent), stamping the resolved config, its hash, and the root seed. Also
// used by evaluation commands so every run leaves a manifest behind.
void record_stage(const PipelineConfig& config, const std::string& out_dir,
                  const StageResult& result);

// Each stage reads its inputs from the layout above, writes its outputs, and
// merges its counts into manifest.json. Stages are deterministic given the
// config, the inputs, and a warm or deterministic service.
StageResult build_pool(const PipelineConfig& config, const std::string& tuples_path,
                       const std::string& out_dir);
StageResult collect_traces(const PipelineConfig& config, const std::string& out_dir);
StageResult apply_filters(const PipelineConfig& config, const std::string& out_dir);
StageResult score_candidates(const PipelineConfig& config, const std::string& out_dir);
StageResult select_candidates(const PipelineConfig& config, const std::string& out_dir);
StageResult render_dataset(const PipelineConfig& config, const std::string& out_dir);
StageResult mix_into_dataset(const PipelineConfig& config, const std::string& general_path,
                             const std::string& out_dir);

// All stages in order. On a stage failure the manifest is still written, with
// status "failed" and the failing stage recorded, then the error is rethrown.
void run_pipeline(const PipelineConfig& config, const std::string& tuples_path,
                  const std::string& general_path, const std::string& out_dir);

}  // namespace absinstruct::pipeline
