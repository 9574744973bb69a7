#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace r0scope {

enum class ErrorCode {
  MissingHeader,
  EncodingError,
  EndpointUnreachable,
  EndpointRejected,
  Timeout,
  Unparseable,
  NegativeValue,
  NormalizationError,
  IntegrityError,
  StorageError,
  InvalidRange,
  TooManyDiseases,
  EmptySelection,
  SourceUnavailable,
  StoreUnavailable,
  BindFailure,
  InvalidConfig,
  InvalidParameter,
  GazetteerFormat,
};

std::string_view error_code_name(ErrorCode code);

// Every failure the library reports is an Error; code() names the contract
// error (the names double as API error codes).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Endpoint failures keep the HTTP status (0 when no response arrived) and the
// pmid being extracted so the scheduler can re-queue the paper.
class EndpointError : public Error {
 public:
  EndpointError(ErrorCode code, const std::string& message, int status = 0)
      : Error(code, message), status_(status) {}

  int status() const noexcept { return status_; }
  const std::string& pmid() const noexcept { return pmid_; }
  void set_pmid(std::string pmid) { pmid_ = std::move(pmid); }

 private:
  int status_;
  std::string pmid_;
};

// A raw summary that could not become a structured one; cause() is the
// underlying parser error (Unparseable or NegativeValue).
class NormalizationError : public Error {
 public:
  NormalizationError(ErrorCode cause, const std::string& message)
      : Error(ErrorCode::NormalizationError, std::string(error_code_name(cause)) + ": " + message),
        cause_(cause) {}

  ErrorCode cause() const noexcept { return cause_; }

 private:
  ErrorCode cause_;
};

}  // namespace r0scope
