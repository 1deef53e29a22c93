#pragma once

#include <stdexcept>

namespace dcast {

/// Bad shapes, widths, or other construction-time mistakes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input files (CSV rows, config files, model files).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN/Inf escaped a forward pass or a training loss diverged.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem trouble: unreadable dataset, unwritable output, model
/// fingerprint mismatch.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dcast
