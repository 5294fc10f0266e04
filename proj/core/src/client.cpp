#include "absinstruct/client.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

#include "absinstruct/error.hpp"
#include "absinstruct/sha256.hpp"

namespace absinstruct {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Write-once: writes to a temp file and renames into place, so readers never
// see a partial entry and an existing entry is never clobbered.
void write_cache_entry(const std::filesystem::path& path, const std::string& body) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  static std::atomic<uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(counter.fetch_add(1)) + "." +
         std::to_string(std::chrono::steady_clock::now().time_since_epoch().count());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << body;
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    if (!std::filesystem::exists(path))
      throw IoError("cannot finalize cache entry " + path.string());
  }
}

}  // namespace

struct ServiceClient::Impl {
  ClientOptions options;

  explicit Impl(ClientOptions opts) : options(std::move(opts)) {
    if (options.endpoint.empty()) throw ConfigError("service endpoint is empty");
    if (options.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  }

  std::filesystem::path cache_path(const std::string& key) const {
    return std::filesystem::path(options.cache_dir) / (key + ".json");
  }

  // Returns the service response for the canonical request, from cache when
  // available. `canonical` is the cache identity; the endpoint is not part of
  // it, so a cache survives server restarts on other ports.
  json exchange(const json& canonical, const json& body) {
    const std::string key = sha256_hex(canonical.dump());
    const bool caching = !options.cache_dir.empty();
    if (caching) {
      const auto path = cache_path(key);
      if (std::filesystem::exists(path)) {
        json entry;
        try {
          entry = json::parse(read_file(path));
        } catch (const json::exception& e) {
          throw IoError("corrupt cache entry " + path.string() + ": " + e.what());
        }
        if (!entry.contains("response"))
          throw IoError("corrupt cache entry " + path.string() + ": no response field");
        return entry.at("response");
      }
    }
    json response = post_with_retries(body);
    if (caching) {
      json entry{{"request", canonical}, {"response", response}};
      write_cache_entry(cache_path(key), entry.dump(2) + "\n");
    }
    return response;
  }

  json post_with_retries(const json& body) {
    const std::string payload = body.dump();
    std::string last_error;
    int last_status = 0;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      if (attempt > 0) {
        long delay = static_cast<long>(options.retry_backoff_ms) * (1L << (attempt - 1));
        delay = std::min(delay, 5000L);
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }
      httplib::Client http(options.endpoint);
      http.set_connection_timeout(options.timeout_seconds, 0);
      http.set_read_timeout(options.timeout_seconds, 0);
      http.set_write_timeout(options.timeout_seconds, 0);
      auto result = http.Post("/v1/completions", payload, "application/json");
      if (!result) {
        last_error = httplib::to_string(result.error());
        continue;  // transport failure: retry
      }
      if (result->status >= 200 && result->status < 300) {
        try {
          return json::parse(result->body);
        } catch (const json::exception& e) {
          throw ApiError(result->status,
                         std::string("service returned unparseable JSON: ") + e.what());
        }
      }
      if (result->status >= 400 && result->status < 500) {
        throw ApiError(result->status, "service rejected request (" +
                                           std::to_string(result->status) + "): " + result->body);
      }
      last_status = result->status;  // 5xx: retry
      last_error = "status " + std::to_string(result->status);
    }
    if (last_status >= 500)
      throw ApiError(last_status, "service failed after " +
                                      std::to_string(options.max_retries + 1) + " attempts (" +
                                      last_error + ") at " + options.endpoint);
    throw TransportError("cannot reach " + options.endpoint + ": " + last_error);
  }
};

ServiceClient::ServiceClient(ClientOptions options) : impl_(new Impl(std::move(options))) {}

ServiceClient::~ServiceClient() = default;

std::vector<std::string> ServiceClient::generate(const GenerationRequest& request) {
  if (request.num_samples < 1) throw ConfigError("num_samples must be >= 1");
  if (request.num_samples > 1 && request.temperature <= 0.0)
    throw ConfigError("multiple samples require temperature > 0");
  if (request.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (request.temperature < 0.0) throw ConfigError("temperature must be >= 0");

  const json canonical{{"kind", "generate"},
                       {"max_tokens", request.max_tokens},
                       {"model", request.model_id},
                       {"num_samples", request.num_samples},
                       {"prompt", request.prompt},
                       {"temperature", request.temperature}};
  const json body{{"model", request.model_id},
                  {"prompt", request.prompt},
                  {"temperature", request.temperature},
                  {"n", request.num_samples},
                  {"max_tokens", request.max_tokens}};
  const json response = impl_->exchange(canonical, body);

  if (!response.contains("choices") || !response.at("choices").is_array())
    throw ApiError(200, "malformed completion payload: no choices array");
  const json& choices = response.at("choices");
  if (static_cast<int>(choices.size()) < request.num_samples)
    throw ApiError(200, "service returned " + std::to_string(choices.size()) + " choices, want " +
                            std::to_string(request.num_samples));
  std::vector<std::string> texts;
  texts.reserve(request.num_samples);
  for (int i = 0; i < request.num_samples; ++i) {
    const json& choice = choices.at(i);
    if (!choice.contains("text") || !choice.at("text").is_string())
      throw ApiError(200, "malformed completion payload: choice without text");
    texts.push_back(choice.at("text").get<std::string>());
  }
  return texts;
}

ScoreResult ServiceClient::score(const ScoreRequest& request) {
  if (request.continuation.empty()) throw SchemaError("score: continuation is empty");

  const json canonical{{"kind", "score"},
                       {"context", request.context},
                       {"continuation", request.continuation},
                       {"model", request.model_id}};
  const std::string full_prompt = request.context + request.continuation;
  const json body{{"model", request.model_id}, {"prompt", full_prompt},  {"max_tokens", 0},
                  {"echo", true},              {"logprobs", 0}};
  const json response = impl_->exchange(canonical, body);

  if (!response.contains("choices") || !response.at("choices").is_array() ||
      response.at("choices").empty())
    throw ApiError(200, "malformed scoring payload: no choices");
  const json& choice = response.at("choices").at(0);
  if (!choice.contains("logprobs") || choice.at("logprobs").is_null())
    throw CapabilityError("service cannot return token log-probabilities");
  const json& logprobs = choice.at("logprobs");
  if (!logprobs.contains("token_logprobs") || !logprobs.contains("text_offset"))
    throw CapabilityError("service logprobs lack token_logprobs/text_offset");
  const json& lps = logprobs.at("token_logprobs");
  const json& offsets = logprobs.at("text_offset");
  if (lps.size() != offsets.size())
    throw ApiError(200, "scoring payload length mismatch between logprobs and offsets");

  const auto context_end = static_cast<long>(request.context.size());
  ScoreResult result;
  for (size_t i = 0; i < lps.size(); ++i) {
    const long offset = offsets.at(i).get<long>();
    if (offset < context_end) continue;  // conditioning region
    if (lps.at(i).is_null())
      throw CapabilityError("service returned a null log-probability inside the continuation");
    double lp = lps.at(i).get<double>();
    if (lp > 1e-6) throw ApiError(200, "service returned a positive log-probability");
    result.token_logprobs.push_back(std::min(lp, 0.0));
  }
  if (result.token_logprobs.empty())
    throw ApiError(200, "scorer attributed no tokens to the continuation");
  result.token_count = static_cast<int>(result.token_logprobs.size());
  return result;
}

}  // namespace absinstruct
