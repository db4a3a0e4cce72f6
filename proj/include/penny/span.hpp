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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace penny {

// Byte range into a source text plus the 1-based line/column of both ends.
// Columns count code points, not bytes.
struct Span {
  std::size_t start_byte = 0;
  std::size_t end_byte = 0;
  std::uint32_t start_line = 1;
  std::uint32_t start_col = 1;
  std::uint32_t end_line = 1;
  std::uint32_t end_col = 1;

  std::size_t size() const { return end_byte - start_byte; }
  bool contains(const Span& other) const {
    return start_byte <= other.start_byte && other.end_byte <= end_byte;
  }
  bool same_range(const Span& other) const {
    return start_byte == other.start_byte && end_byte == other.end_byte;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

class LineIndex {
 public:
  explicit LineIndex(std::string_view text);

  Span span(std::size_t start_byte, std::size_t end_byte) const;
  void position(std::size_t byte, std::uint32_t& line, std::uint32_t& col) const;

 private:
  std::string_view text_;
  std::vector<std::size_t> line_starts_;
};

struct SourceFile {
  std::string path;
  std::string text;
  std::uint64_t version = 1;
};

bool is_valid_utf8(std::string_view text);

}  // namespace penny
