#pragma once

#include <stdexcept>
#include <string>

namespace absinstruct {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data (bad JSONL line, unknown relation string, ...).
struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error(what) {}
};

// Invalid pipeline or client configuration.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// File could not be opened, read, or written.
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what) {}
};

// Could not reach the service at all (DNS, refused, timeout), after retries.
struct TransportError : Error {
  explicit TransportError(const std::string& what) : Error(what) {}
};

// Service answered with a non-2xx status or an unusable payload.
struct ApiError : Error {
  ApiError(int status, const std::string& what) : Error(what), status(status) {}
  int status;
};

// Service works but lacks a required feature (e.g. token logprobs).
struct CapabilityError : Error {
  explicit CapabilityError(const std::string& what) : Error(what) {}
};

}  // namespace absinstruct
