#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace absinstruct {

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.0;
  int num_samples = 1;  // >= 2 requires temperature > 0
  int max_tokens = 512;
  std::string model_id;
};

struct ScoreRequest {
  std::string context;       // conditioning text, e.g. the rendered training prompt
  std::string continuation;  // text whose token log-probabilities are wanted
  std::string model_id;
};

struct ScoreResult {
  std::vector<double> token_logprobs;  // natural logs, every element <= 0
  int token_count = 0;                 // equals token_logprobs.size()
};

struct ClientOptions {
  std::string endpoint;  // e.g. "http://127.0.0.1:8700"
  std::string cache_dir;  // empty disables caching
  int max_retries = 3;
  int retry_backoff_ms = 100;
  int timeout_seconds = 30;
};

// JSON-over-HTTP client for a completions service, with a write-once
// content-addressed response cache. Identical requests never hit the network
// twice when a cache directory is configured. Retries: never on 4xx, up to
// max_retries on 5xx or transport failures, exponential backoff.
//
// Thread-safe: any number of threads may call generate/score concurrently.
class ServiceClient {
 public:
  explicit ServiceClient(ClientOptions options);
  ~ServiceClient();

  ServiceClient(const ServiceClient&) = delete;
  ServiceClient& operator=(const ServiceClient&) = delete;

  // Returns exactly num_samples completions, in the service's sample order.
  std::vector<std::string> generate(const GenerationRequest& request);

  // Log-probabilities of the continuation tokens given the context. The
  // service owns tokenization; a token is part of the continuation when its
  // text offset lies at or past the end of the context.
  ScoreResult score(const ScoreRequest& request);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Applies fn to every item with at most max_concurrency worker threads.
// Results keep input order. The first exception thrown by fn is rethrown
// after all workers stop; remaining items are skipped on failure.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, int max_concurrency, Fn&& fn)
    -> std::vector<decltype(fn(items.front()))> {
  using Out = decltype(fn(items.front()));
  std::vector<Out> results(items.size());
  if (items.empty()) return results;

  const size_t workers =
      std::min<size_t>(items.size(), static_cast<size_t>(std::max(1, max_concurrency)));
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= items.size()) return;
      try {
        results[i] = fn(items[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

}  // namespace absinstruct
