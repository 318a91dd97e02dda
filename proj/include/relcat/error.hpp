#pragma once

#include <stdexcept>
#include <string>

namespace relcat {

// Stable machine-readable codes; the CLI maps them onto exit statuses.
enum class ErrorCode {
  kIngest,
  kPrecondition,
  kConfig,
  kMissingInput,
  kCacheMiss,
  kAuth,
  kTransport,
  kFormat,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class IngestError : public Error {
 public:
  IngestError(const std::string& message, std::size_t byte_offset)
      : Error(ErrorCode::kIngest, message), byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& message)
      : Error(ErrorCode::kPrecondition, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorCode::kConfig, message) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error(ErrorCode::kFormat, message) {}
};

class MissingInputError : public Error {
 public:
  MissingInputError(const std::string& stage, const std::string& path)
      : Error(ErrorCode::kMissingInput,
              "stage '" + stage + "' requires missing input " + path),
        path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class CacheMiss : public Error {
 public:
  explicit CacheMiss(const std::string& message)
      : Error(ErrorCode::kCacheMiss, message) {}
};

class AuthError : public Error {
 public:
  explicit AuthError(const std::string& message)
      : Error(ErrorCode::kAuth, message) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message)
      : Error(ErrorCode::kTransport, message) {}
};

}  // namespace relcat
