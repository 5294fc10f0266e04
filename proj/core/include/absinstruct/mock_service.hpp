#pragma once

#include <memory>
#include <string>

namespace absinstruct {

struct MockServerOptions {
  std::string fixture_path;  // optional JSON fixture table; empty = synthesis only
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
};

// Deterministic completions server for tests and offline runs. Looks answers
// up in a fixture table keyed by prompt hash; prompts without an entry get a
// synthesized response derived only from the prompt text, so repeated runs
// are byte-identical. Serves:
//   POST /v1/completions  (generation, and echo scoring with logprobs)
//   GET  /stats           (request counters, JSON)
//   GET  /healthz         ("ok")
//
// Fixture file shape: {"entries": [ ... ]} where each entry has "prompt" (or
// "prompt_sha256") plus any of: "completions" (array of strings, cycled when
// fewer than requested), "token_logprobs" + "text_offset" (verbatim scoring
// reply), "status" (forced HTTP status), "fail_times" (N leading 503s).
class MockService {
 public:
  explicit MockService(MockServerOptions options);
  ~MockService();

  MockService(const MockService&) = delete;
  MockService& operator=(const MockService&) = delete;

  // Binds and serves on a background thread; returns once ready.
  void start();
  void stop();

  // Blocks until the server stops (for use as a foreground process).
  void wait();

  int port() const;
  std::string endpoint() const;  // "http://host:port"

  // Number of /v1/completions requests served so far.
  long completion_requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace absinstruct
