#include "r0scope/error.hpp"

namespace r0scope {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::EndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::EndpointRejected: return "EndpointRejected";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::Unparseable: return "Unparseable";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::NormalizationError: return "NormalizationError";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::TooManyDiseases: return "TooManyDiseases";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::SourceUnavailable: return "SourceUnavailable";
    case ErrorCode::StoreUnavailable: return "StoreUnavailable";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::GazetteerFormat: return "GazetteerFormat";
  }
  return "Unknown";
}

}  // namespace r0scope
