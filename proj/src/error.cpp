// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/error.hpp"

namespace visynth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileMissing: return "FileMissing";
    case ErrorCode::RecordInvalid: return "RecordInvalid";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidMask: return "InvalidMask";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::TemplateInvalid: return "TemplateInvalid";
    case ErrorCode::MissingMarker: return "MissingMarker";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::MalformedTurnStructure: return "MalformedTurnStructure";
    case ErrorCode::NoLabelFound: return "NoLabelFound";
    case ErrorCode::AmbiguousLabel: return "AmbiguousLabel";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::EmptyAnnotations: return "EmptyAnnotations";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpStatus: return "HttpStatus";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::RetriesExhausted: return "RetriesExhausted";
    case ErrorCode::ConnectionFailed: return "ConnectionFailed";
    case ErrorCode::NoRuleMatched: return "NoRuleMatched";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace visynth
