#include "egoemg/error.hpp"

namespace egoemg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kDegenerateFrame: return "degenerate-frame";
    case ErrorKind::kDegenerateHandVector: return "degenerate-hand-vector";
    case ErrorKind::kOutOfRange: return "out-of-range";
    case ErrorKind::kLength: return "length";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kUndefinedScore: return "undefined-score";
    case ErrorKind::kDisconnectedGraph: return "disconnected-graph";
    case ErrorKind::kRosterTooSmall: return "roster-too-small";
    case ErrorKind::kMalformedHeader: return "malformed-header";
    case ErrorKind::kChecksumMismatch: return "checksum-mismatch";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& detail) { throw Error(kind, detail); }

}  // namespace egoemg
