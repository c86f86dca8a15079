#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace herbage {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Key/value metadata carried by every artifact (tool version, config
/// hash, seed, ...). Ordered so serialization is stable.
using Provenance = std::map<std::string, std::string>;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// {tool_version, config_hash, seed}
Provenance make_provenance(std::string_view config_text, std::uint64_t seed);

}  // namespace herbage
