#pragma once

#include <stdexcept>
#include <string>

namespace motionlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or container content (bad magic, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input ended before the declared amount of data was read.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// Tensor, frame or field geometry does not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong state (double backward, missing grad, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Value outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Too few frames, block larger than frame, window larger than frame.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Value does not fit its declared bit width or search range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Wrong number of conditioning frames for the network kind.
class ArityError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace motionlab
