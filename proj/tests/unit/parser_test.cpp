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
#include <gtest/gtest.h>

#include <json.hpp>

#include "penny/dsl.hpp"
#include "penny/error.hpp"

namespace penny::dsl {
namespace {

SyntaxTree parse_text(const std::string& text) { return parse(SourceFile{"t.w", text, 1}); }

NodeId find_kind(const SyntaxTree& t, NodeKind kind, std::size_t nth = 0) {
  for (NodeId i = 0; i < t.size(); ++i)
    if (t.node(i).kind == kind && nth-- == 0) return i;
  return kNoNode;
}

TEST(ParserTest, ParsesDeclarationsAndCalls) {
  auto t = parse_text("bring cloud;\nlet b = new cloud.Bucket();\nb.put(\"k\", \"v\");\n");
  EXPECT_EQ(t.root().kind, NodeKind::Program);
  ASSERT_EQ(t.root().children.size(), 3u);
  NodeId ctor = find_kind(t, NodeKind::ConstructorCall);
  ASSERT_NE(ctor, kNoNode);
  EXPECT_EQ(t.node(ctor).text, "cloud.Bucket");
  EXPECT_EQ(t.text_of(ctor), "new cloud.Bucket()");
  NodeId call = find_kind(t, NodeKind::MethodCall);
  ASSERT_NE(call, kNoNode);
  EXPECT_EQ(t.node(call).text, "put");
}

TEST(ParserTest, NumbersAndDurationsCarryExactValues) {
  auto t = parse_text("let a = 0.25; let b = 5e7; let c = 90s; let d = 2h; let e = 1d;");
  EXPECT_EQ(t.node(find_kind(t, NodeKind::Number, 0)).number, Rational(1, 4));
  EXPECT_EQ(t.node(find_kind(t, NodeKind::Number, 1)).number, Rational(50000000));
  EXPECT_EQ(t.node(find_kind(t, NodeKind::DurationLiteral, 0)).number, Rational(90));
  EXPECT_EQ(t.node(find_kind(t, NodeKind::DurationLiteral, 1)).number, Rational(7200));
  EXPECT_EQ(t.node(find_kind(t, NodeKind::DurationLiteral, 2)).number, Rational(86400));
}

TEST(ParserTest, StringEscapesAreDecoded) {
  auto t = parse_text(R"(let s = "a\"b\\c\n\{x\}";)");
  EXPECT_EQ(t.node(find_kind(t, NodeKind::String)).text, "a\"b\\c\n{x}");
}

TEST(ParserTest, SpansCountCodePointColumns) {
  auto t = parse_text("let s = \"ü\"; let n = 1;");
  NodeId n = find_kind(t, NodeKind::Number);
  const Span& sp = t.node(n).span;
  EXPECT_EQ(sp.start_line, 1u);
  // "let s = "ü"; let n = " is 21 code points, 22 bytes.
  EXPECT_EQ(sp.start_byte, 22u);
  EXPECT_EQ(sp.start_col, 22u);
}

TEST(ParserTest, InflightPhaseFollowsInnermostClosure) {
  auto t = parse_text("let q = new cloud.Queue();\nq.push(\"pre\");\nlet f = inflight () => { q.push(\"in\"); };\n");
  NodeId pre = find_kind(t, NodeKind::MethodCall, 0);
  NodeId in = find_kind(t, NodeKind::MethodCall, 1);
  EXPECT_EQ(phase_of(t, t.node(pre).span), Phase::Preflight);
  EXPECT_EQ(phase_of(t, t.node(in).span), Phase::Inflight);
  EXPECT_EQ(t.node(in).phase, Phase::Inflight);
}

TEST(ParserTest, IfLetWithElse) {
  auto t = parse_text("let f = inflight () => { if let x = q.pop() { log(x); } else { log(\"none\"); } };");
  NodeId iflet = find_kind(t, NodeKind::IfLet);
  ASSERT_NE(iflet, kNoNode);
  EXPECT_EQ(t.node(iflet).text, "x");
}

TEST(ParserTest, StructAndObjectLiterals) {
  auto t = parse_text("let r = ApiResponse { status: 200, body: {a: [1, 2]} };");
  EXPECT_NE(find_kind(t, NodeKind::StructLiteral), kNoNode);
  EXPECT_NE(find_kind(t, NodeKind::ObjectLiteral), kNoNode);
  EXPECT_NE(find_kind(t, NodeKind::ArrayLiteral), kNoNode);
}

TEST(ParserTest, AnnotationWrapperIsRecognized) {
  auto t = parse_text("let b = [new cloud.Bucket(), {payloadBytes: 100}][0];");
  NodeId w = find_kind(t, NodeKind::AnnotationWrapper);
  ASSERT_NE(w, kNoNode);
  EXPECT_EQ(find_kind(t, NodeKind::Index), kNoNode);
}

TEST(ParserTest, ErrorsCarrySpanAndExpectation) {
  try {
    parse_text("let x = ;");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    ASSERT_TRUE(e.span().has_value());
    EXPECT_EQ(e.span()->start_byte, 8u);
    EXPECT_EQ(e.expected(), "expression");
    EXPECT_EQ(e.found(), "';'");
    auto j = nlohmann::json::parse(diagnostic_json(e));
    EXPECT_EQ(j["code"], "ParseError");
    EXPECT_EQ(j["span"]["start_col"], 9);
  }
}

TEST(ParserTest, RejectsUnterminatedInput) {
  EXPECT_THROW(parse_text("let x = \"abc"), Error);
  EXPECT_THROW(parse_text("/* open"), Error);
  EXPECT_THROW(parse_text("let d = 5w;"), Error);
  EXPECT_THROW(parse_text("let f = inflight (x) => {};"), Error);
}

TEST(ParserTest, ExactAndInnermostLookups) {
  auto t = parse_text("let b = new cloud.Bucket();");
  NodeId ctor = find_kind(t, NodeKind::ConstructorCall);
  EXPECT_EQ(t.exact(t.node(ctor).span), ctor);
  Span inside = t.node(ctor).span;
  inside.start_byte += 1;
  inside.end_byte = inside.start_byte + 1;
  EXPECT_EQ(t.innermost(inside), ctor);
}

TEST(ParserTest, ParseExpressionStandalone) {
  auto t = parse_expression("{a: 1, b: \"x\"}");
  EXPECT_EQ(t.root().kind, NodeKind::ObjectLiteral);
}

TEST(ParserTest, DebugJsonDump) {
  auto t = parse_text("let a = 1;");
  auto j = nlohmann::json::parse(to_json(t));
  EXPECT_EQ(j["kind"], "program");
  EXPECT_EQ(j["children"][0]["kind"], "let-binding");
}

}  // namespace
}  // namespace penny::dsl
