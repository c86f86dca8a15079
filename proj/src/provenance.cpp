#include "herbage/provenance.hpp"

#include <cstdio>

#include "herbage/error.hpp"

namespace herbage {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Provenance make_provenance(std::string_view config_text, std::uint64_t seed) {
  return {{"tool_version", std::string(kToolVersion)},
          {"config_hash", hex64(fnv1a64(config_text))},
          {"seed", std::to_string(seed)}};
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidConfig: return "invalid_config";
    case ErrorCode::Io: return "io";
    case ErrorCode::Decode: return "decode";
    case ErrorCode::BadMagic: return "bad_magic";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::CorruptPayload: return "corrupt_payload";
    case ErrorCode::UnknownSpecies: return "unknown_species";
    case ErrorCode::EmptyMask: return "empty_mask";
    case ErrorCode::NoBackgrounds: return "no_backgrounds";
    case ErrorCode::MissingSpecies: return "missing_species";
    case ErrorCode::EmptyRaster: return "empty_raster";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::PercentSum: return "percent_sum";
    case ErrorCode::MalformedRow: return "malformed_row";
    case ErrorCode::IdMismatch: return "id_mismatch";
    case ErrorCode::Divergence: return "divergence";
  }
  return "unknown";
}

}  // namespace herbage
