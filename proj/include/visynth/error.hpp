// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace visynth {

enum class ErrorCode {
  FileMissing,
  RecordInvalid,
  IoFailure,
  InvalidMask,
  DuplicateId,
  FractionOutOfRange,
  TemplateInvalid,
  MissingMarker,
  EmptyField,
  MalformedTurnStructure,
  NoLabelFound,
  AmbiguousLabel,
  EmptyPool,
  InvalidArgument,
  MissingPlaceholder,
  EmptyAnnotations,
  OutOfRange,
  Timeout,
  HttpStatus,
  MalformedResponse,
  RetriesExhausted,
  ConnectionFailed,
  NoRuleMatched,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure the toolkit reports. `detail()` carries
/// the structured payload of the error (marker name, placeholder name,
/// offending id, ...), `what()` a human readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail, const std::string& message)
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}
  Error(ErrorCode code, const std::string& message) : Error(code, {}, message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Failure raised by a chat backend. Transient failures are retried by
/// RetryingBackend; the rest propagate immediately.
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, const std::string& message, bool transient, int http_status = 0)
      : Error(code, http_status ? std::to_string(http_status) : std::string{}, message),
        transient_(transient),
        http_status_(http_status) {}

  bool transient() const noexcept { return transient_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool transient_;
  int http_status_;
};

}  // namespace visynth
