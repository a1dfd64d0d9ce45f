#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egoemg {

enum class ErrorKind {
  kInvalidInput,
  kConfiguration,
  kDomain,
  kDegenerateFrame,
  kDegenerateHandVector,
  kOutOfRange,
  kLength,
  kShapeMismatch,
  kUndefinedScore,
  kDisconnectedGraph,
  kRosterTooSmall,
  kMalformedHeader,
  kChecksumMismatch,
  kTruncated,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported as egoemg::Error. The kind is stable and
// machine-readable; the message carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& detail);

}  // namespace egoemg
