#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace herbage {

enum class ErrorCode {
  InvalidArgument,
  InvalidConfig,
  Io,
  Decode,
  BadMagic,
  Truncated,
  CorruptPayload,
  UnknownSpecies,
  EmptyMask,
  NoBackgrounds,
  MissingSpecies,
  EmptyRaster,
  ShapeMismatch,
  PercentSum,
  MalformedRow,
  IdMismatch,
  Divergence,
};

std::string_view to_string(ErrorCode code);

/// Every failure the library reports carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace herbage
