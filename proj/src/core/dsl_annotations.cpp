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
#include <algorithm>
#include <set>

#include <json.hpp>

#include "penny/dsl.hpp"
#include "penny/error.hpp"

namespace penny::dsl {
namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto start = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!start(s.front())) return false;
  return std::all_of(s.begin(), s.end(), [&](char c) { return start(c) || (c >= '0' && c <= '9'); });
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '{': out += "\\{"; break;
      case '}': out += "\\}"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string key_literal(std::string_view key) {
  return is_identifier(key) ? std::string(key) : quote(key);
}

// Object literal of a wrapper: wrapper -> array-literal -> [target, object].
NodeId wrapper_object(const SyntaxTree& tree, NodeId wrapper) {
  return tree.node(tree.node(wrapper).children[0]).children[1];
}
NodeId wrapper_target(const SyntaxTree& tree, NodeId wrapper) {
  return tree.node(tree.node(wrapper).children[0]).children[0];
}

AnnotationEntries read_entries(const SyntaxTree& tree, NodeId object) {
  AnnotationEntries entries;
  std::set<std::string> seen;
  for (NodeId f : tree.node(object).children) {
    const SyntaxNode& field = tree.node(f);
    if (!seen.insert(field.text).second) {
      throw Error(ErrorCode::MalformedAnnotation, "duplicate annotation key '" + field.text + "'")
          .with_span(field.span);
    }
    const SyntaxNode& value = tree.node(field.children[0]);
    switch (value.kind) {
      case NodeKind::Number: entries.emplace_back(field.text, Scalar::of_number(value.number)); break;
      case NodeKind::String: entries.emplace_back(field.text, Scalar::of_string(value.text)); break;
      case NodeKind::DurationLiteral:
        entries.emplace_back(field.text, Scalar::of_duration(value.number));
        break;
      default:
        throw Error(ErrorCode::MalformedAnnotation,
                    "annotation value for '" + field.text + "' must be a number, string or duration")
            .with_span(value.span);
    }
  }
  return entries;
}

std::vector<NodeId> source_order(const SyntaxTree& tree) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    out.push_back(id);
    const auto& ch = tree.node(id).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

bool inside_annotation_object(const SyntaxTree& tree, NodeId id) {
  for (NodeId cur = id; cur != kNoNode; cur = tree.node(cur).parent) {
    NodeId parent = tree.node(cur).parent;
    if (parent == kNoNode) return false;
    const SyntaxNode& p = tree.node(parent);
    if (p.kind == NodeKind::AnnotationWrapper) {
      // The index literal or the wrapper's own array are not targets either.
      if (cur != p.children[0]) return true;
    }
    if (p.kind == NodeKind::ArrayLiteral && p.parent != kNoNode &&
        tree.node(p.parent).kind == NodeKind::AnnotationWrapper && p.children.size() == 2 &&
        cur == p.children[1])
      return true;
  }
  return false;
}

}  // namespace

std::string Scalar::literal() const {
  switch (kind) {
    case Kind::String: return quote(text);
    case Kind::Duration:
      if (!number.is_integer() || number.is_negative())
        throw Error(ErrorCode::InvalidArgument, "duration must be a whole, non-negative number of seconds");
      return std::to_string(number.num()) + "s";
    case Kind::Number: {
      auto d = number.decimal();
      if (!d) throw Error(ErrorCode::InvalidArgument, "number " + number.str() + " has no finite decimal form");
      return *d;
    }
  }
  return {};
}

const Scalar* find_entry(const AnnotationEntries& entries, std::string_view key) {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

std::vector<Annotation> read_annotations(const SyntaxTree& tree) {
  std::vector<Annotation> out;
  for (NodeId id : source_order(tree)) {
    const SyntaxNode& n = tree.node(id);
    if (n.kind == NodeKind::AnnotationWrapper) {
      Annotation a;
      a.wrapper_span = n.span;
      a.target_span = tree.node(wrapper_target(tree, id)).span;
      a.entries = read_entries(tree, wrapper_object(tree, id));
      out.push_back(std::move(a));
    } else if (n.kind == NodeKind::Index) {
      const SyntaxNode& target = tree.node(n.children[0]);
      if (target.kind == NodeKind::ArrayLiteral && target.children.size() == 2) {
        throw Error(ErrorCode::MalformedAnnotation,
                    "annotation must have the form [expression, {key: value}][0]")
            .with_span(n.span);
      }
    }
  }
  return out;
}

SourceFile write_annotation(const SourceFile& source, const Span& target,
                            const AnnotationEntries& entries) {
  if (target.start_byte > target.end_byte || target.end_byte > source.text.size()) {
    throw Error(ErrorCode::SpanOutOfRange, "annotation target lies outside the source").with_span(target);
  }
  if (entries.empty()) return source;
  {
    std::set<std::string_view> keys;
    for (const auto& [k, v] : entries) {
      if (k.empty()) throw Error(ErrorCode::InvalidArgument, "annotation key must not be empty");
      if (!keys.insert(k).second)
        throw Error(ErrorCode::InvalidArgument, "duplicate annotation key '" + k + "'");
      (void)v.literal();
    }
  }

  SyntaxTree tree = parse(source);
  NodeId id = tree.exact(target);
  // exact() prefers the outermost node; descend to an expression with this range.
  while (id != kNoNode && !is_expression(tree.node(id).kind)) {
    const auto& ch = tree.node(id).children;
    NodeId next = kNoNode;
    for (NodeId c : ch)
      if (tree.node(c).span.same_range(target)) next = c;
    id = next;
  }
  if (id == kNoNode) {
    throw Error(ErrorCode::TargetNotAnExpression, "annotation target does not match an expression")
        .with_span(target);
  }
  if (inside_annotation_object(tree, id)) {
    throw Error(ErrorCode::TargetNotAnExpression, "annotation target lies inside an annotation")
        .with_span(target);
  }
  // A wrapper spanning the target: annotate the wrapped expression instead.
  if (tree.node(id).kind == NodeKind::AnnotationWrapper) id = wrapper_target(tree, id);

  const std::string& text = source.text;
  std::string out;
  const SyntaxNode& node = tree.node(id);
  NodeId array = node.parent;
  bool wrapped = array != kNoNode && tree.node(array).kind == NodeKind::ArrayLiteral &&
                 tree.node(array).parent != kNoNode &&
                 tree.node(tree.node(array).parent).kind == NodeKind::AnnotationWrapper &&
                 tree.node(array).children[0] == id;

  if (wrapped) {
    NodeId wrapper = tree.node(array).parent;
    NodeId object = wrapper_object(tree, wrapper);
    AnnotationEntries merged = read_entries(tree, object);
    for (const auto& [k, v] : entries) {
      auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& e) { return e.first == k; });
      if (it != merged.end()) it->second = v;
      else merged.emplace_back(k, v);
    }
    std::string obj = "{";
    for (std::size_t i = 0; i < merged.size(); ++i) {
      if (i) obj += ", ";
      obj += key_literal(merged[i].first) + ": " + merged[i].second.literal();
    }
    obj += "}";
    const Span& os = tree.node(object).span;
    out = text.substr(0, os.start_byte) + obj + text.substr(os.end_byte);
  } else {
    std::string obj = "{";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i) obj += ", ";
      obj += key_literal(entries[i].first) + ": " + entries[i].second.literal();
    }
    obj += "}";
    out = text.substr(0, node.span.start_byte) + "[" +
          text.substr(node.span.start_byte, node.span.size()) + ", " + obj + "][0]" +
          text.substr(node.span.end_byte);
  }

  SourceFile result{source.path, std::move(out), source.version};
  if (result.text != source.text) ++result.version;
  try {
    (void)read_annotations(parse(result));
  } catch (const Error& e) {
    throw Error(ErrorCode::Internal, std::string("annotated source failed to re-parse: ") + e.what());
  }
  return result;
}

StripResult strip_annotations(const SourceFile& source) {
  SyntaxTree tree = parse(source);
  const std::string& text = source.text;
  StripResult result;
  std::string out;
  struct Pending {
    std::size_t start, end;
    AnnotationEntries entries;
  };
  std::vector<Pending> pending;

  auto emit = [&](auto&& self, NodeId id) -> void {
    const SyntaxNode& n = tree.node(id);
    if (n.kind == NodeKind::AnnotationWrapper) {
      AnnotationEntries entries = read_entries(tree, wrapper_object(tree, id));
      std::size_t index = pending.size();
      pending.push_back({out.size(), 0, std::move(entries)});
      self(self, wrapper_target(tree, id));
      pending[index].end = out.size();
      return;
    }
    std::size_t pos = n.span.start_byte;
    for (NodeId c : n.children) {
      const Span& cs = tree.node(c).span;
      out.append(text, pos, cs.start_byte - pos);
      self(self, c);
      pos = cs.end_byte;
    }
    out.append(text, pos, n.span.end_byte - pos);
  };
  emit(emit, 0);

  LineIndex lines(out);
  for (auto& p : pending) {
    Annotation a;
    a.target_span = lines.span(p.start, p.end);
    a.wrapper_span = a.target_span;
    a.entries = std::move(p.entries);
    result.removed.push_back(std::move(a));
  }
  result.source = SourceFile{source.path, std::move(out), source.version};
  if (result.source.text != source.text) ++result.source.version;
  return result;
}

std::string to_json(const SyntaxTree& tree, int indent) {
  auto build = [&](auto&& self, NodeId id) -> nlohmann::ordered_json {
    const SyntaxNode& n = tree.node(id);
    nlohmann::ordered_json j;
    j["kind"] = to_string(n.kind);
    j["span"] = {{"start_byte", n.span.start_byte}, {"end_byte", n.span.end_byte},
                 {"start_line", n.span.start_line}, {"start_col", n.span.start_col},
                 {"end_line", n.span.end_line},     {"end_col", n.span.end_col}};
    j["phase"] = to_string(n.phase);
    if (!n.text.empty()) j["text"] = n.text;
    if (n.kind == NodeKind::Number || n.kind == NodeKind::DurationLiteral) j["value"] = n.number.str();
    auto children = nlohmann::ordered_json::array();
    for (NodeId c : n.children) children.push_back(self(self, c));
    j["children"] = std::move(children);
    return j;
  };
  return build(build, 0).dump(indent) + "\n";
}

}  // namespace penny::dsl
