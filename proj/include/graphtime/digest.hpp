#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace graphtime {

// FNV-1a 64-bit; used for config ids and input-file digests in manifests.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

}  // namespace graphtime
