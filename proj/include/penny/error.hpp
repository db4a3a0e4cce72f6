// SPDX-License-Identifier: Apache-2.0
/*
Copyright (C) 2026 The Penny Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "penny/span.hpp"

namespace penny {

enum class ErrorCode {
  ParseError,
  SpanOutOfRange,
  MalformedAnnotation,
  TargetNotAnExpression,
  UnsupportedResource,
  UnsupportedMethod,
  UnsupportedConstruct,
  UnresolvedReceiver,
  DanglingTrigger,
  UnknownRoute,
  PhaseMismatch,
  NoEntryPoints,
  NotAnEntryPoint,
  CatalogParseError,
  DuplicateRule,
  NonIncreasingTiers,
  InvalidRule,
  NegativeQuantity,
  UnpricedFactor,
  CycleDetected,
  UnresolvedAssumption,
  UnknownAssumption,
  InvalidAssumption,
  InvalidArgument,
  NotFound,
  Conflict,
  Io,
  Overflow,
  Internal,
};

std::string_view to_string(ErrorCode code);

// The single exception type thrown by the core. `details` carries the
// machine-readable payload of the error: unresolved keys, unpriced factors,
// node ids on a cycle, and so on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  const std::optional<Span>& span() const { return span_; }
  const std::vector<std::string>& details() const { return details_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

  Error& with_span(const Span& span) {
    span_ = span;
    return *this;
  }
  Error& with_details(std::vector<std::string> details) {
    details_ = std::move(details);
    return *this;
  }
  Error& with_expectation(std::string expected, std::string found) {
    expected_ = std::move(expected);
    found_ = std::move(found);
    return *this;
  }

 private:
  ErrorCode code_;
  std::optional<Span> span_;
  std::vector<std::string> details_;
  std::string expected_;
  std::string found_;
};

// {"code", "message", "span"?, "details"?, "expected"?, "found"?} on one line.
std::string diagnostic_json(const Error& error);

}  // namespace penny
