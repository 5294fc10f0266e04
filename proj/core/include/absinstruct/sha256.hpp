#pragma once

#include <string>
#include <string_view>

namespace absinstruct {

// Hex-encoded SHA-256 digest. Used for content-addressed cache keys and for
// mock fixture lookups, so the same function must be reachable from tests
// and the fixture tooling.
std::string sha256_hex(std::string_view data);

}  // namespace absinstruct
