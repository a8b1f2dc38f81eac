#pragma once

#include <stdexcept>
#include <string>

namespace xrcn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer extents that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared where only finite values are allowed.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Bad arguments or configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Image decoding, dataset layout, or filesystem problems.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed model container. `kind()` tells which check failed.
class ModelFormatError : public Error {
 public:
  enum class Kind { kBadMagic, kUnsupportedVersion, kBadHeader, kManifestMismatch, kPayloadLength, kIo };

  ModelFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace xrcn
