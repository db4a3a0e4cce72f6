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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "penny/rational.hpp"
#include "penny/span.hpp"

namespace penny::dsl {

enum class NodeKind {
  Program,
  Bring,
  LetBinding,
  IfLet,
  Block,
  Return,
  ExpressionStatement,
  ConstructorCall,
  MethodCall,
  Call,
  MemberAccess,
  Identifier,
  Closure,
  Parameter,
  TypeRef,
  String,
  Number,
  DurationLiteral,
  Boolean,
  Nil,
  ObjectLiteral,
  ObjectField,
  StructLiteral,
  ArrayLiteral,
  Index,
  AnnotationWrapper,
  NamedArgument,
};

std::string_view to_string(NodeKind kind);
bool is_expression(NodeKind kind);

enum class Phase { Preflight, Inflight };

std::string_view to_string(Phase phase);

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

// One node of the syntax tree. `text` holds the payload of the node: the
// identifier or member name, the decoded string value, the constructor type
// name, the callee of a bare call, the field key. Numbers and durations carry
// their exact value in `number` (durations in seconds).
struct SyntaxNode {
  NodeKind kind = NodeKind::Program;
  Span span;
  Phase phase = Phase::Preflight;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::string text;
  Rational number;
};

// Immutable parsed program. Nodes live in an arena indexed by NodeId; the root
// is always node 0.
class SyntaxTree {
 public:
  SyntaxTree() = default;
  SyntaxTree(std::shared_ptr<const SourceFile> source, std::vector<SyntaxNode> nodes)
      : source_(std::move(source)), nodes_(std::move(nodes)) {}

  const SourceFile& source() const { return *source_; }
  std::shared_ptr<const SourceFile> source_ptr() const { return source_; }
  const SyntaxNode& node(NodeId id) const { return nodes_.at(id); }
  const SyntaxNode& root() const { return nodes_.at(0); }
  std::size_t size() const { return nodes_.size(); }
  std::string_view text_of(NodeId id) const;

  // Deepest node whose span contains `span`.
  NodeId innermost(const Span& span) const;
  // Node whose byte range equals `span`, preferring the outermost; kNoNode if none.
  NodeId exact(const Span& span) const;

 private:
  std::shared_ptr<const SourceFile> source_;
  std::vector<SyntaxNode> nodes_;
};

SyntaxTree parse(const SourceFile& source);
// Parses a standalone expression; the tree root is the expression node.
SyntaxTree parse_expression(std::string_view text);

// Inflight iff the innermost enclosing closure is an inflight closure.
Phase phase_of(const SyntaxTree& tree, const Span& span);

struct Scalar {
  enum class Kind { Number, String, Duration };
  Kind kind = Kind::Number;
  Rational number;  // value for Number; seconds for Duration
  std::string text;  // value for String

  static Scalar of_number(Rational value) { return {Kind::Number, value, {}}; }
  static Scalar of_string(std::string value) { return {Kind::String, 0, std::move(value)}; }
  static Scalar of_duration(Rational seconds) { return {Kind::Duration, seconds, {}}; }

  // Source-level literal, e.g. `200`, `"x"`, `120s`.
  std::string literal() const;
  friend bool operator==(const Scalar&, const Scalar&) = default;
};

using AnnotationEntries = std::vector<std::pair<std::string, Scalar>>;

const Scalar* find_entry(const AnnotationEntries& entries, std::string_view key);

struct Annotation {
  Span target_span;
  Span wrapper_span;
  AnnotationEntries entries;
};

std::vector<Annotation> read_annotations(const SyntaxTree& tree);

// Wraps (or merges into the existing wrapper of) the expression at `target`.
// An empty `entries` map leaves the source untouched.
SourceFile write_annotation(const SourceFile& source, const Span& target,
                            const AnnotationEntries& entries);

struct StripResult {
  SourceFile source;
  // The removed annotations, with target spans in the stripped text.
  std::vector<Annotation> removed;
};

StripResult strip_annotations(const SourceFile& source);

// Debug dump: {kind, span, phase, text?, children}.
std::string to_json(const SyntaxTree& tree, int indent = 2);

}  // namespace penny::dsl
