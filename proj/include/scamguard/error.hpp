#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scamguard {

enum class ErrorKind {
  MalformedNumber,
  MalformedUrl,
  UnknownRegion,
  InvalidEvent,
  InvalidValue,
  ProfileMismatch,
  EmptyCorpus,
  BadImageShape,
  BadInputDim,
  BadInputShape,
  EmptyBatch,
  DegenerateDataset,
  DimensionMismatch,
  ArchitectureMismatch,
  SchemaMismatch,
  VersionUnsupported,
  UnknownUrl,
  EmptySplit,
  NotFound,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace scamguard
