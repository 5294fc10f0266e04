#include "absinstruct/mock_service.hpp"

#include <cctype>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "absinstruct/error.hpp"
#include "absinstruct/rng.hpp"
#include "absinstruct/sha256.hpp"

namespace absinstruct {

namespace {

using nlohmann::json;

struct FixtureEntry {
  std::vector<std::string> completions;
  json token_logprobs;  // array (may hold nulls); null when unset
  json text_offset;     // array of ints; null when unset
  int status = 0;       // forced HTTP status, 0 = none
  int fail_times = 0;   // leading 503 responses before succeeding
};

// FNV-1a alone is unusable for low-bit decisions (its multiplier is odd, so
// bit 0 is plain byte parity); finish with a splitmix64 round.
uint64_t mixed_hash(std::string_view text) {
  return Rng(fnv1a64(text)).next();
}

double hash_unit(std::string_view text) {
  return static_cast<double>(mixed_hash(text) >> 11) * 0x1.0p-53;
}

// Literal text between two markers; false when either marker is missing.
bool extract_between(const std::string& text, std::string_view after, std::string_view before,
                     std::string* out) {
  size_t start = text.find(after);
  if (start == std::string::npos) return false;
  start += after.size();
  size_t end = text.find(before, start);
  if (end == std::string::npos) return false;
  *out = text.substr(start, end - start);
  return true;
}

const char* meaning_filler(std::string_view salt, const std::string& prompt) {
  static const char* kFillers[] = {
      "a specific kind of thing encountered in everyday situations",
      "a particular member of a much broader category",
      "an action or object with a narrow, concrete sense",
      "a familiar element of common experience",
      "a term whose sense is tied to one concrete situation",
      "a notion that names one definite thing or act",
      "a specialized expression for a well-known idea",
      "an instance drawn from ordinary life",
  };
  uint64_t h = mixed_hash(std::string(salt) + "|" + prompt);
  return kFillers[h % (sizeof(kFillers) / sizeof(kFillers[0]))];
}

// Deterministic three-step reply to a meaning-collection prompt. The shape
// mirrors what a cooperative generator would produce: meanings that usually
// mention the queried words, then a bare Yes/No verdict.
std::string synthesize_meaning_response(const std::string& prompt, const std::string& salt) {
  std::string cpt, ins;
  bool event = false;
  if (!extract_between(prompt, "does the meaning of the new word ", " encompass the original word ",
                       &cpt) ||
      !extract_between(prompt, " encompass the original word ", "?\nStep 1:", &ins)) {
    event = extract_between(prompt, "Can we consider ", " as an abstract description of the sentence ",
                            &cpt) &&
            extract_between(prompt, " as an abstract description of the sentence ", "?\nStep 1:",
                            &ins);
    if (!event) return {};
  }

  const std::string salted = salt + prompt;
  if (mixed_hash("garbled|" + salted) % 29 == 0)
    return "I cannot determine the meanings of these words from the given sentence.";

  const bool omit_instance = mixed_hash("omit|" + salted) % 11 == 0;
  std::string step1;
  if (event) {
    step1 = omit_instance
                ? std::string("The sentence describes ") + meaning_filler("ins", salted) + "."
                : "The sentence '" + ins + "' describes " + meaning_filler("ins", salted) + ".";
  } else {
    step1 = omit_instance ? std::string("The original word refers to ") +
                                meaning_filler("ins", salted) + "."
                          : "The original word '" + ins + "' refers to " +
                                meaning_filler("ins", salted) + ".";
  }
  std::string step2 = event ? "The abstract description '" + cpt + "' covers " +
                                  meaning_filler("cpt", salted) + "."
                            : "The new word '" + cpt + "' denotes " +
                                  meaning_filler("cpt", salted) + ".";
  const char* verdict = (mixed_hash("verdict|" + salted) & 1) ? "Yes." : "No.";
  return "Step 1: " + step1 + "\nStep 2: " + step2 + "\nStep 3: " + verdict;
}

std::string synthesize_completion(const std::string& prompt, int sample_index) {
  const std::string salt = sample_index == 0 ? "" : "#s" + std::to_string(sample_index);
  std::string meaning = synthesize_meaning_response(prompt, salt);
  if (!meaning.empty()) return meaning;
  if (prompt.find("\"Yes\" or \"No\"") != std::string::npos ||
      prompt.find("is valid or not") != std::string::npos) {
    return (mixed_hash("verdict|" + salt + prompt) & 1) ? "Yes." : "No.";
  }
  return "Mock reply " + sha256_hex(salt + prompt).substr(0, 12) + ".";
}

json synthesize_scoring(const std::string& prompt) {
  json token_logprobs = json::array();
  json text_offset = json::array();
  json tokens = json::array();
  const std::string prompt_tag = sha256_hex(prompt).substr(0, 16);
  size_t i = 0;
  size_t index = 0;
  while (i < prompt.size()) {
    while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
    if (i >= prompt.size()) break;
    size_t start = i;
    while (i < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
    const std::string token = prompt.substr(start, i - start);
    tokens.push_back(token);
    text_offset.push_back(start);
    if (index == 0) {
      token_logprobs.push_back(nullptr);  // no conditioning for the first token
    } else {
      double unit = hash_unit(token + "|" + std::to_string(index) + "|" + prompt_tag);
      token_logprobs.push_back(-0.05 - 2.25 * unit);
    }
    ++index;
  }
  return json{{"tokens", tokens},
              {"token_logprobs", token_logprobs},
              {"text_offset", text_offset}};
}

}  // namespace

struct MockService::Impl {
  MockServerOptions options;
  httplib::Server server;
  std::thread listener;
  int bound_port = 0;

  std::mutex mutex;
  std::unordered_map<std::string, FixtureEntry> entries;  // keyed by sha256(prompt)
  long completion_requests = 0;

  explicit Impl(MockServerOptions opts) : options(std::move(opts)) {
    if (!options.fixture_path.empty()) load_fixture(options.fixture_path);
    server.Post("/v1/completions",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle_completions(req, res);
                });
    server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard<std::mutex> lock(mutex);
      res.set_content(json{{"completion_requests", completion_requests}}.dump(), "application/json");
    });
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
  }

  void load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock fixture " + path);
    json fixture;
    try {
      std::ostringstream buffer;
      buffer << in.rdbuf();
      fixture = json::parse(buffer.str());
    } catch (const json::exception& e) {
      throw SchemaError("mock fixture " + path + " is not valid JSON: " + e.what());
    }
    if (!fixture.is_object() || !fixture.contains("entries") || !fixture.at("entries").is_array())
      throw SchemaError("mock fixture " + path + " must be {\"entries\": [...]}");
    for (const auto& item : fixture.at("entries")) {
      std::string key;
      if (item.contains("prompt")) {
        key = sha256_hex(item.at("prompt").get<std::string>());
      } else if (item.contains("prompt_sha256")) {
        key = item.at("prompt_sha256").get<std::string>();
      } else {
        throw SchemaError("mock fixture entry lacks prompt/prompt_sha256");
      }
      FixtureEntry entry;
      if (item.contains("completions"))
        entry.completions = item.at("completions").get<std::vector<std::string>>();
      if (item.contains("token_logprobs")) entry.token_logprobs = item.at("token_logprobs");
      if (item.contains("text_offset")) entry.text_offset = item.at("text_offset");
      entry.status = item.value("status", 0);
      entry.fail_times = item.value("fail_times", 0);
      entries[key] = std::move(entry);
    }
  }

  void handle_completions(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      res.status = 400;
      res.set_content(json{{"error", "invalid JSON body"}}.dump(), "application/json");
      return;
    }
    if (!body.contains("prompt") || !body.at("prompt").is_string()) {
      res.status = 400;
      res.set_content(json{{"error", "missing prompt"}}.dump(), "application/json");
      return;
    }
    const std::string prompt = body.at("prompt").get<std::string>();
    const std::string key = sha256_hex(prompt);

    FixtureEntry snapshot;
    bool have_entry = false;
    {
      std::lock_guard<std::mutex> lock(mutex);
      ++completion_requests;
      auto it = entries.find(key);
      if (it != entries.end()) {
        if (it->second.fail_times > 0) {
          --it->second.fail_times;
          res.status = 503;
          res.set_content(json{{"error", "planted transient failure"}}.dump(), "application/json");
          return;
        }
        snapshot = it->second;
        have_entry = true;
      }
    }
    if (have_entry && snapshot.status != 0) {
      res.status = snapshot.status;
      res.set_content(json{{"error", "planted failure"}}.dump(), "application/json");
      return;
    }

    const bool scoring = body.value("echo", false) && body.value("max_tokens", -1) == 0;
    if (scoring) {
      json logprobs;
      if (have_entry && snapshot.token_logprobs.is_array() && snapshot.text_offset.is_array()) {
        logprobs = json{{"tokens", json::array()},
                        {"token_logprobs", snapshot.token_logprobs},
                        {"text_offset", snapshot.text_offset}};
      } else {
        logprobs = synthesize_scoring(prompt);
      }
      json response{{"object", "text_completion"},
                    {"model", body.value("model", "mock")},
                    {"choices", json::array({json{{"index", 0},
                                                  {"text", prompt},
                                                  {"logprobs", logprobs},
                                                  {"finish_reason", "stop"}}})}};
      res.set_content(response.dump(), "application/json");
      return;
    }

    const int n = std::max(1, body.value("n", 1));
    json choices = json::array();
    for (int i = 0; i < n; ++i) {
      std::string text;
      if (have_entry && !snapshot.completions.empty()) {
        text = snapshot.completions[static_cast<size_t>(i) % snapshot.completions.size()];
      } else {
        text = synthesize_completion(prompt, i);
      }
      choices.push_back(json{{"index", i}, {"text", text}, {"finish_reason", "stop"}});
    }
    json response{{"object", "text_completion"},
                  {"model", body.value("model", "mock")},
                  {"choices", choices}};
    res.set_content(response.dump(), "application/json");
  }
};

MockService::MockService(MockServerOptions options) : impl_(new Impl(std::move(options))) {}

MockService::~MockService() {
  if (impl_->listener.joinable()) stop();
}

void MockService::start() {
  auto& impl = *impl_;
  if (impl.options.port == 0) {
    impl.bound_port = impl.server.bind_to_any_port(impl.options.host);
    if (impl.bound_port <= 0) throw TransportError("mock server cannot bind to a free port");
  } else {
    if (!impl.server.bind_to_port(impl.options.host, impl.options.port))
      throw TransportError("mock server cannot bind to port " +
                           std::to_string(impl.options.port));
    impl.bound_port = impl.options.port;
  }
  impl.listener = std::thread([&impl] { impl.server.listen_after_bind(); });
  while (!impl.server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

void MockService::stop() {
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

void MockService::wait() {
  if (impl_->listener.joinable()) impl_->listener.join();
}

int MockService::port() const { return impl_->bound_port; }

std::string MockService::endpoint() const {
  return "http://" + impl_->options.host + ":" + std::to_string(impl_->bound_port);
}

long MockService::completion_requests() const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->completion_requests;
}

}  // namespace absinstruct
