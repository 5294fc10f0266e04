#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absinstruct/prompts.hpp"

namespace absinstruct {

// How select_top_k ranks candidates: by plausibility of the response, by
// plausibility of the input (ablation), or uniformly at random (ablation).
enum class PlausibilityMode { Response, Input, Random };

std::string_view to_string(PlausibilityMode mode);
PlausibilityMode plausibility_mode_from_string(std::string_view text);

struct PipelineConfig {
  int pool_size_per_relation = 2000;
  int k_per_relation = 200;  // must be even: selection takes k/2 per label
  double diversity_threshold = 0.7;
  PlausibilityMode plausibility_mode = PlausibilityMode::Response;
  bool enable_prediction_filter = true;
  bool enable_keyword_filter = true;
  bool enable_diversity_filter = true;
  uint64_t random_seed = 42;
  std::string generator_endpoint = "http://127.0.0.1:8700";
  std::string scorer_endpoint = "http://127.0.0.1:8700";
  std::string cache_dir = "cache";

  // Prompt flavor and trace collection. Vanilla style with traces disabled
  // reproduces the direct-injection dataset (bare Yes/No responses).
  prompts::PromptStyle prompt_style = prompts::PromptStyle::TwoStep;
  bool collect_traces = true;

  std::string generator_model = "mock-generator";
  std::string scorer_model = "mock-scorer";
  int trace_max_tokens = 512;
  double trace_temperature = 0.0;

  int max_concurrency = 4;
  int max_retries = 3;
  int retry_backoff_ms = 100;

  bool operator==(const PipelineConfig&) const = default;
};

// Parse a config JSON object; unknown keys are rejected so typos fail loud.
// Missing keys keep their defaults. Validates before returning.
PipelineConfig config_from_json_text(std::string_view text);
PipelineConfig load_config(const std::string& path);

// Throws ConfigError on invariant violations (odd k, k > pool size,
// threshold outside [0,1], non-positive sizes).
void validate(const PipelineConfig& config);

// Canonical JSON rendering: sorted keys, fixed field set. Two equal configs
// always render identically, so the hash is stable across runs.
std::string to_json_text(const PipelineConfig& config, int indent = 2);
std::string config_hash(const PipelineConfig& config);

// Apply one "key=value" override (CLI flag form) onto a parsed config.
// Throws ConfigError for unknown keys or unparseable values.
void apply_override(PipelineConfig& config, std::string_view key, std::string_view value);

// Apply a batch of overrides, validating cross-field invariants only once at
// the end, so override order cannot create spurious intermediate violations.
PipelineConfig with_overrides(const PipelineConfig& base,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace absinstruct
