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
#include "penny/span.hpp"

#include <algorithm>

#include "penny/error.hpp"

namespace penny {

LineIndex::LineIndex(std::string_view text) : text_(text) {
  line_starts_.push_back(0);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') line_starts_.push_back(i + 1);
  }
}

void LineIndex::position(std::size_t byte, std::uint32_t& line, std::uint32_t& col) const {
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), byte);
  auto line_idx = static_cast<std::size_t>(it - line_starts_.begin()) - 1;
  line = static_cast<std::uint32_t>(line_idx + 1);
  std::uint32_t c = 1;
  for (std::size_t i = line_starts_[line_idx]; i < byte && i < text_.size(); ++i) {
    if ((static_cast<unsigned char>(text_[i]) & 0xC0) != 0x80) ++c;
  }
  col = c;
}

Span LineIndex::span(std::size_t start_byte, std::size_t end_byte) const {
  Span s;
  s.start_byte = start_byte;
  s.end_byte = end_byte;
  position(start_byte, s.start_line, s.start_col);
  position(end_byte, s.end_line, s.end_col);
  return s;
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > text.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong encodings and surrogates
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += len;
  }
  return true;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::MalformedAnnotation: return "MalformedAnnotation";
    case ErrorCode::TargetNotAnExpression: return "TargetNotAnExpression";
    case ErrorCode::UnsupportedResource: return "UnsupportedResource";
    case ErrorCode::UnsupportedMethod: return "UnsupportedMethod";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::UnresolvedReceiver: return "UnresolvedReceiver";
    case ErrorCode::DanglingTrigger: return "DanglingTrigger";
    case ErrorCode::UnknownRoute: return "UnknownRoute";
    case ErrorCode::PhaseMismatch: return "PhaseMismatch";
    case ErrorCode::NoEntryPoints: return "NoEntryPoints";
    case ErrorCode::NotAnEntryPoint: return "NotAnEntryPoint";
    case ErrorCode::CatalogParseError: return "CatalogParseError";
    case ErrorCode::DuplicateRule: return "DuplicateRule";
    case ErrorCode::NonIncreasingTiers: return "NonIncreasingTiers";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::NegativeQuantity: return "NegativeQuantity";
    case ErrorCode::UnpricedFactor: return "UnpricedFactor";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::UnresolvedAssumption: return "UnresolvedAssumption";
    case ErrorCode::UnknownAssumption: return "UnknownAssumption";
    case ErrorCode::InvalidAssumption: return "InvalidAssumption";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

}  // namespace penny
