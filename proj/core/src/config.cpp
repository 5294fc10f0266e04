#include "absinstruct/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "absinstruct/error.hpp"
#include "absinstruct/sha256.hpp"

namespace absinstruct {

namespace {

using nlohmann::json;

json config_to_json(const PipelineConfig& c) {
  return json{{"pool_size_per_relation", c.pool_size_per_relation},
              {"k_per_relation", c.k_per_relation},
              {"diversity_threshold", c.diversity_threshold},
              {"plausibility_mode", std::string(to_string(c.plausibility_mode))},
              {"enable_prediction_filter", c.enable_prediction_filter},
              {"enable_keyword_filter", c.enable_keyword_filter},
              {"enable_diversity_filter", c.enable_diversity_filter},
              {"random_seed", c.random_seed},
              {"generator_endpoint", c.generator_endpoint},
              {"scorer_endpoint", c.scorer_endpoint},
              {"cache_dir", c.cache_dir},
              {"prompt_style", prompts::to_string(c.prompt_style)},
              {"collect_traces", c.collect_traces},
              {"generator_model", c.generator_model},
              {"scorer_model", c.scorer_model},
              {"trace_max_tokens", c.trace_max_tokens},
              {"trace_temperature", c.trace_temperature},
              {"max_concurrency", c.max_concurrency},
              {"max_retries", c.max_retries},
              {"retry_backoff_ms", c.retry_backoff_ms}};
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  PipelineConfig c;
  const json known = config_to_json(c);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config key: " + key);

  read_field(j, "pool_size_per_relation", c.pool_size_per_relation);
  read_field(j, "k_per_relation", c.k_per_relation);
  read_field(j, "diversity_threshold", c.diversity_threshold);
  if (j.contains("plausibility_mode"))
    c.plausibility_mode = plausibility_mode_from_string(j.at("plausibility_mode").get<std::string>());
  read_field(j, "enable_prediction_filter", c.enable_prediction_filter);
  read_field(j, "enable_keyword_filter", c.enable_keyword_filter);
  read_field(j, "enable_diversity_filter", c.enable_diversity_filter);
  read_field(j, "random_seed", c.random_seed);
  read_field(j, "generator_endpoint", c.generator_endpoint);
  read_field(j, "scorer_endpoint", c.scorer_endpoint);
  read_field(j, "cache_dir", c.cache_dir);
  if (j.contains("prompt_style"))
    c.prompt_style = prompts::prompt_style_from_string(j.at("prompt_style").get<std::string>());
  read_field(j, "collect_traces", c.collect_traces);
  read_field(j, "generator_model", c.generator_model);
  read_field(j, "scorer_model", c.scorer_model);
  read_field(j, "trace_max_tokens", c.trace_max_tokens);
  read_field(j, "trace_temperature", c.trace_temperature);
  read_field(j, "max_concurrency", c.max_concurrency);
  read_field(j, "max_retries", c.max_retries);
  read_field(j, "retry_backoff_ms", c.retry_backoff_ms);
  validate(c);
  return c;
}

}  // namespace

std::string_view to_string(PlausibilityMode mode) {
  switch (mode) {
    case PlausibilityMode::Response: return "response";
    case PlausibilityMode::Input: return "input";
    case PlausibilityMode::Random: return "random";
  }
  throw Error("unknown plausibility mode");
}

PlausibilityMode plausibility_mode_from_string(std::string_view text) {
  if (text == "response") return PlausibilityMode::Response;
  if (text == "input") return PlausibilityMode::Input;
  if (text == "random") return PlausibilityMode::Random;
  throw ConfigError("unknown plausibility mode: " + std::string(text));
}

PipelineConfig config_from_json_text(std::string_view text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from_json(parsed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has wrong type: ") + e.what());
  }
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return config_from_json_text(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void validate(const PipelineConfig& c) {
  if (c.pool_size_per_relation < 1) throw ConfigError("pool_size_per_relation must be positive");
  if (c.k_per_relation < 1) throw ConfigError("k_per_relation must be positive");
  if (c.k_per_relation % 2 != 0)
    throw ConfigError("k_per_relation must be even (selection is balanced across labels)");
  if (c.k_per_relation > c.pool_size_per_relation)
    throw ConfigError("k_per_relation cannot exceed pool_size_per_relation");
  if (c.diversity_threshold < 0.0 || c.diversity_threshold > 1.0)
    throw ConfigError("diversity_threshold must lie in [0, 1]");
  if (c.prompt_style == prompts::PromptStyle::TwoStep && !c.collect_traces)
    throw ConfigError("two_step responses require collect_traces");
  if (!c.collect_traces && (c.enable_prediction_filter || c.enable_keyword_filter))
    throw ConfigError("prediction/keyword filters require collect_traces");
  if (c.trace_max_tokens < 1) throw ConfigError("trace_max_tokens must be positive");
  if (c.trace_temperature < 0.0) throw ConfigError("trace_temperature must be >= 0");
  if (c.max_concurrency < 1) throw ConfigError("max_concurrency must be positive");
  if (c.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (c.retry_backoff_ms < 0) throw ConfigError("retry_backoff_ms must be >= 0");
}

std::string to_json_text(const PipelineConfig& config, int indent) {
  return config_to_json(config).dump(indent);
}

std::string config_hash(const PipelineConfig& config) {
  return sha256_hex(config_to_json(config).dump());
}

namespace {

void set_override_slot(json& j, std::string_view key, std::string_view value) {
  if (!j.contains(std::string(key))) throw ConfigError("unknown config key: " + std::string(key));
  json& slot = j.at(std::string(key));
  try {
    if (slot.is_string()) {
      slot = std::string(value);
    } else if (slot.is_boolean()) {
      if (value == "true" || value == "1") slot = true;
      else if (value == "false" || value == "0") slot = false;
      else throw ConfigError("expected boolean for " + std::string(key));
    } else {
      slot = json::parse(value);
    }
  } catch (const json::exception&) {
    throw ConfigError("cannot parse value for " + std::string(key) + ": " + std::string(value));
  }
}

PipelineConfig rebuild(const json& j, std::string_view key, std::string_view value) {
  try {
    return config_from_json(j);
  } catch (const json::exception&) {
    throw ConfigError("value has wrong type for " + std::string(key) + ": " + std::string(value));
  }
}

}  // namespace

void apply_override(PipelineConfig& config, std::string_view key, std::string_view value) {
  json j = config_to_json(config);
  set_override_slot(j, key, value);
  config = rebuild(j, key, value);
}

PipelineConfig with_overrides(const PipelineConfig& base,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  json j = config_to_json(base);
  for (const auto& [key, value] : overrides) set_override_slot(j, key, value);
  if (overrides.empty()) {
    validate(base);
    return base;
  }
  const auto& [last_key, last_value] = overrides.back();
  return rebuild(j, last_key, last_value);
}

}  // namespace absinstruct
