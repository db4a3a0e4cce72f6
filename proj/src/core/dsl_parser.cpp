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
#include <array>

#include "penny/dsl.hpp"
#include "penny/error.hpp"

namespace penny::dsl {
namespace {

enum class Tok {
  Ident,
  Number,
  Duration,
  String,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Comma,
  Semicolon,
  Colon,
  Dot,
  Arrow,
  Equals,
  Question,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;  // identifier name or decoded string
  Rational value;    // number value, or duration in seconds
};

std::string describe(const Token& t, std::string_view src) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + std::string(src.substr(t.start, t.end - t.start)) + "'";
}

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  Lexer(std::string_view src, const LineIndex& lines) : src_(src), lines_(lines) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      if (pos_ >= src_.size()) {
        out.push_back(Token{Tok::End, pos_, pos_, {}, 0});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  [[noreturn]] void fail(std::size_t start, std::size_t end, const std::string& expected) {
    std::string found = start < src_.size() ? "'" + std::string(src_.substr(start, std::max<std::size_t>(end - start, 1))) + "'"
                                            : "end of input";
    throw Error(ErrorCode::ParseError, "expected " + expected + ", found " + found)
        .with_span(lines_.span(start, std::min(end, src_.size())))
        .with_expectation(expected, found);
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        auto close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail(pos_, src_.size(), "end of block comment");
        pos_ = close + 2;
      } else {
        return;
      }
    }
  }

  Token next() {
    std::size_t start = pos_;
    char c = src_[pos_];
    auto punct = [&](Tok kind, std::size_t len) {
      pos_ += len;
      return Token{kind, start, pos_, {}, 0};
    };
    switch (c) {
      case '(': return punct(Tok::LParen, 1);
      case ')': return punct(Tok::RParen, 1);
      case '{': return punct(Tok::LBrace, 1);
      case '}': return punct(Tok::RBrace, 1);
      case '[': return punct(Tok::LBracket, 1);
      case ']': return punct(Tok::RBracket, 1);
      case ',': return punct(Tok::Comma, 1);
      case ';': return punct(Tok::Semicolon, 1);
      case ':': return punct(Tok::Colon, 1);
      case '.': return punct(Tok::Dot, 1);
      case '?': return punct(Tok::Question, 1);
      case '=':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') return punct(Tok::Arrow, 2);
        return punct(Tok::Equals, 1);
      case '"': return string_literal();
      default: break;
    }
    if (digit(c)) return number();
    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      return Token{Tok::Ident, start, pos_, std::string(src_.substr(start, pos_ - start)), 0};
    }
    // Consume a whole UTF-8 sequence for the diagnostic.
    std::size_t end = pos_ + 1;
    while (end < src_.size() && (static_cast<unsigned char>(src_[end]) & 0xC0) == 0x80) ++end;
    fail(start, end, "token");
  }

  Token number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && digit(src_[pos_ + 1])) {
      ++pos_;
      while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && digit(src_[pos_])) {
        while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
      } else {
        pos_ = save;
      }
    }
    Rational value = Rational::parse(src_.substr(start, pos_ - start));
    if (pos_ < src_.size() && ident_start(src_[pos_])) {
      std::size_t unit_start = pos_;
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      std::string_view unit = src_.substr(unit_start, pos_ - unit_start);
      std::int64_t factor = 0;
      if (unit == "s") factor = 1;
      else if (unit == "m") factor = 60;
      else if (unit == "h") factor = 3600;
      else if (unit == "d") factor = 86400;
      else fail(unit_start, pos_, "duration unit (s, m, h, d)");
      Rational seconds = value * factor;
      if (!seconds.is_integer()) fail(start, pos_, "duration of whole seconds");
      return Token{Tok::Duration, start, pos_, {}, seconds};
    }
    return Token{Tok::Number, start, pos_, {}, value};
  }

  Token string_literal() {
    std::size_t start = pos_;
    ++pos_;
    std::string value;
    for (;;) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') fail(start, pos_, "closing '\"'");
      char c = src_[pos_];
      if (c == '"') {
        ++pos_;
        break;
      }
      if (c == '\\') {
        if (pos_ + 1 >= src_.size()) fail(pos_, pos_ + 1, "escape sequence");
        char e = src_[pos_ + 1];
        switch (e) {
          case '"': value += '"'; break;
          case '\\': value += '\\'; break;
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case 'r': value += '\r'; break;
          case '{': value += '{'; break;
          case '}': value += '}'; break;
          default: fail(pos_, pos_ + 2, "escape sequence");
        }
        pos_ += 2;
        continue;
      }
      value += c;
      ++pos_;
    }
    return Token{Tok::String, start, pos_, std::move(value), 0};
  }

  std::string_view src_;
  const LineIndex& lines_;
  std::size_t pos_ = 0;
};

constexpr std::array<std::string_view, 10> kKeywords = {
    "bring", "let", "new", "inflight", "if", "else", "return", "true", "false", "nil"};

bool is_keyword(std::string_view s) {
  return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

class Parser {
 public:
  Parser(std::string_view src, const LineIndex& lines, std::vector<Token> tokens)
      : src_(src), lines_(lines), toks_(std::move(tokens)) {}

  std::vector<SyntaxNode> program() {
    nodes_.emplace_back();  // root placeholder at index 0
    std::vector<NodeId> stmts;
    while (peek().kind != Tok::End) stmts.push_back(statement(true));
    SyntaxNode& root = nodes_[0];
    root.kind = NodeKind::Program;
    root.span = lines_.span(0, src_.size());
    root.phase = Phase::Preflight;
    root.children = std::move(stmts);
    link_parents();
    return std::move(nodes_);
  }

  std::vector<SyntaxNode> single_expression() {
    NodeId e = expression(false);
    if (peek().kind != Tok::End) fail("end of expression");
    // Move the expression node to index 0 so it becomes the root.
    std::vector<SyntaxNode> out;
    out.reserve(nodes_.size());
    std::vector<NodeId> remap(nodes_.size());
    remap[e] = 0;
    NodeId next = 1;
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (i != e) remap[i] = next++;
    out.resize(nodes_.size());
    for (NodeId i = 0; i < nodes_.size(); ++i) {
      SyntaxNode n = std::move(nodes_[i]);
      for (auto& c : n.children) c = remap[c];
      out[remap[i]] = std::move(n);
    }
    nodes_ = std::move(out);
    link_parents();
    return std::move(nodes_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(idx_ + ahead, toks_.size() - 1)];
  }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool at_word(std::string_view w) const { return at(Tok::Ident) && peek().text == w; }

  const Token& advance() {
    const Token& t = toks_[idx_];
    if (idx_ + 1 < toks_.size()) ++idx_;
    last_end_ = t.end;
    return t;
  }

  [[noreturn]] void fail(const std::string& expected) {
    const Token& t = peek();
    std::string found = describe(t, src_);
    throw Error(ErrorCode::ParseError, "expected " + expected + ", found " + found)
        .with_span(lines_.span(t.start, t.end))
        .with_expectation(expected, found);
  }

  const Token& expect(Tok kind, const char* what) {
    if (!at(kind)) fail(what);
    return advance();
  }
  void expect_word(std::string_view w) {
    if (!at_word(w)) fail("'" + std::string(w) + "'");
    advance();
  }
  std::string expect_name(const char* what) {
    if (!at(Tok::Ident) || is_keyword(peek().text)) fail(what);
    return advance().text;
  }

  NodeId make(NodeKind kind, std::size_t start, std::vector<NodeId> children = {},
              std::string text = {}) {
    SyntaxNode n;
    n.kind = kind;
    n.span = lines_.span(start, last_end_);
    n.phase = inflight_ ? Phase::Inflight : Phase::Preflight;
    n.children = std::move(children);
    n.text = std::move(text);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void link_parents() {
    for (NodeId i = 0; i < nodes_.size(); ++i)
      for (NodeId c : nodes_[i].children) nodes_[c].parent = i;
  }

  // ---- statements ----

  NodeId statement(bool top_level) {
    std::size_t start = peek().start;
    if (at_word("bring")) {
      if (!top_level) fail("statement ('bring' is only allowed at top level)");
      advance();
      std::string module = expect_name("module name");
      expect(Tok::Semicolon, "';'");
      return make(NodeKind::Bring, start, {}, module);
    }
    if (at_word("let")) {
      advance();
      std::string name = expect_name("binding name");
      std::vector<NodeId> children;
      if (at(Tok::Colon)) {
        advance();
        children.push_back(type_ref());
      }
      expect(Tok::Equals, "'='");
      children.push_back(expression(false));
      expect(Tok::Semicolon, "';'");
      return make(NodeKind::LetBinding, start, std::move(children), name);
    }
    if (at_word("if")) {
      advance();
      if (!at_word("let")) fail("'let' (only 'if let' conditionals are supported)");
      advance();
      std::string name = expect_name("binding name");
      expect(Tok::Equals, "'='");
      std::vector<NodeId> children;
      children.push_back(expression(true));
      children.push_back(block());
      if (at_word("else")) {
        advance();
        children.push_back(block());
      }
      return make(NodeKind::IfLet, start, std::move(children), name);
    }
    if (at_word("return")) {
      if (closure_depth_ == 0) fail("statement ('return' outside a closure)");
      advance();
      std::vector<NodeId> children;
      if (!at(Tok::Semicolon)) children.push_back(expression(false));
      expect(Tok::Semicolon, "';'");
      return make(NodeKind::Return, start, std::move(children));
    }
    if (at_word("else")) fail("statement");
    NodeId e = expression(false);
    expect(Tok::Semicolon, "';'");
    return make(NodeKind::ExpressionStatement, start, {e});
  }

  NodeId block() {
    std::size_t start = peek().start;
    expect(Tok::LBrace, "'{'");
    std::vector<NodeId> stmts;
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) fail("'}'");
      stmts.push_back(statement(false));
    }
    advance();
    return make(NodeKind::Block, start, std::move(stmts));
  }

  NodeId type_ref() {
    std::size_t start = peek().start;
    std::string name = expect_name("type name");
    while (at(Tok::Dot)) {
      advance();
      name += "." + expect_name("type name");
    }
    if (at(Tok::Question)) {
      advance();
      name += "?";
    }
    return make(NodeKind::TypeRef, start, {}, name);
  }

  // ---- expressions ----

  NodeId expression(bool no_struct) {
    bool saved = no_struct_;
    no_struct_ = no_struct;
    std::size_t start = peek().start;
    NodeId e = primary();
    for (;;) {
      if (at(Tok::Dot)) {
        advance();
        std::string member = expect_name("member name");
        if (at(Tok::LParen)) {
          std::vector<NodeId> children{e};
          call_arguments(children);
          e = make(NodeKind::MethodCall, start, std::move(children), member);
        } else {
          e = make(NodeKind::MemberAccess, start, {e}, member);
        }
      } else if (at(Tok::LBracket)) {
        advance();
        bool inner_saved = no_struct_;
        no_struct_ = false;
        NodeId index = expression(false);
        no_struct_ = inner_saved;
        expect(Tok::RBracket, "']'");
        e = index_or_wrapper(start, e, index);
      } else if (at(Tok::LParen)) {
        fail("';' (calling the result of an expression is not supported)");
      } else {
        break;
      }
    }
    no_struct_ = saved;
    return e;
  }

  NodeId index_or_wrapper(std::size_t start, NodeId target, NodeId index) {
    const SyntaxNode& t = nodes_[target];
    const SyntaxNode& i = nodes_[index];
    bool wrapper = t.kind == NodeKind::ArrayLiteral && t.children.size() == 2 &&
                   nodes_[t.children[1]].kind == NodeKind::ObjectLiteral &&
                   i.kind == NodeKind::Number && i.number == Rational(0);
    return make(wrapper ? NodeKind::AnnotationWrapper : NodeKind::Index, start, {target, index});
  }

  void call_arguments(std::vector<NodeId>& children) {
    expect(Tok::LParen, "'('");
    bool saved = no_struct_;
    no_struct_ = false;
    while (!at(Tok::RParen)) {
      std::size_t start = peek().start;
      if (at(Tok::Ident) && !is_keyword(peek().text) && peek(1).kind == Tok::Colon) {
        std::string name = advance().text;
        advance();
        NodeId value = expression(false);
        children.push_back(make(NodeKind::NamedArgument, start, {value}, name));
      } else {
        children.push_back(expression(false));
      }
      if (at(Tok::Comma)) {
        advance();
      } else if (!at(Tok::RParen)) {
        fail("',' or ')'");
      }
    }
    advance();
    no_struct_ = saved;
  }

  NodeId primary() {
    std::size_t start = peek().start;
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        Rational v = advance().value;
        NodeId n = make(NodeKind::Number, start);
        nodes_[n].number = v;
        return n;
      }
      case Tok::Duration: {
        Rational v = advance().value;
        NodeId n = make(NodeKind::DurationLiteral, start);
        nodes_[n].number = v;
        return n;
      }
      case Tok::String: {
        std::string v = advance().text;
        return make(NodeKind::String, start, {}, std::move(v));
      }
      case Tok::LBrace: return object_literal(NodeKind::ObjectLiteral, start, {});
      case Tok::LBracket: return array_literal();
      case Tok::Ident: break;
      default: fail("expression");
    }

    const std::string& word = t.text;
    if (word == "new") {
      advance();
      std::string type = expect_name("resource type");
      while (at(Tok::Dot)) {
        advance();
        type += "." + expect_name("resource type");
      }
      std::vector<NodeId> args;
      call_arguments(args);
      return make(NodeKind::ConstructorCall, start, std::move(args), type);
    }
    if (word == "inflight") return closure();
    if (word == "true" || word == "false") {
      advance();
      return make(NodeKind::Boolean, start, {}, word == "true" ? "true" : "false");
    }
    if (word == "nil") {
      advance();
      return make(NodeKind::Nil, start);
    }
    if (is_keyword(word)) fail("expression");

    if (!no_struct_) {
      // Qualified name directly followed by '{' is a struct literal.
      std::size_t look = 1;
      while (peek(look).kind == Tok::Dot && peek(look + 1).kind == Tok::Ident) look += 2;
      if (peek(look).kind == Tok::LBrace) {
        std::string type = advance().text;
        while (at(Tok::Dot)) {
          advance();
          type += "." + advance().text;
        }
        return object_literal(NodeKind::StructLiteral, start, type);
      }
    }

    std::string name = advance().text;
    if (at(Tok::LParen)) {
      std::vector<NodeId> args;
      call_arguments(args);
      return make(NodeKind::Call, start, std::move(args), name);
    }
    return make(NodeKind::Identifier, start, {}, name);
  }

  NodeId object_literal(NodeKind kind, std::size_t start, std::string type) {
    expect(Tok::LBrace, "'{'");
    bool saved = no_struct_;
    no_struct_ = false;
    std::vector<NodeId> fields;
    while (!at(Tok::RBrace)) {
      std::size_t fstart = peek().start;
      std::string key;
      if (at(Tok::String)) {
        key = advance().text;
      } else {
        key = expect_name("field name");
      }
      expect(Tok::Colon, "':'");
      NodeId value = expression(false);
      fields.push_back(make(NodeKind::ObjectField, fstart, {value}, key));
      if (at(Tok::Comma)) {
        advance();
      } else if (!at(Tok::RBrace)) {
        fail("',' or '}'");
      }
    }
    advance();
    no_struct_ = saved;
    return make(kind, start, std::move(fields), std::move(type));
  }

  NodeId array_literal() {
    std::size_t start = peek().start;
    expect(Tok::LBracket, "'['");
    bool saved = no_struct_;
    no_struct_ = false;
    std::vector<NodeId> elems;
    while (!at(Tok::RBracket)) {
      elems.push_back(expression(false));
      if (at(Tok::Comma)) {
        advance();
      } else if (!at(Tok::RBracket)) {
        fail("',' or ']'");
      }
    }
    advance();
    no_struct_ = saved;
    return make(NodeKind::ArrayLiteral, start, std::move(elems));
  }

  NodeId closure() {
    std::size_t start = peek().start;
    bool outer_inflight = inflight_;
    advance();  // inflight
    bool saved_struct = no_struct_;
    no_struct_ = false;
    inflight_ = true;
    ++closure_depth_;
    std::vector<NodeId> children;
    expect(Tok::LParen, "'('");
    while (!at(Tok::RParen)) {
      std::size_t pstart = peek().start;
      std::string name = expect_name("parameter name");
      expect(Tok::Colon, "':' (parameters need a type)");
      NodeId type = type_ref();
      children.push_back(make(NodeKind::Parameter, pstart, {type}, name));
      if (at(Tok::Comma)) {
        advance();
      } else if (!at(Tok::RParen)) {
        fail("',' or ')'");
      }
    }
    advance();
    if (at(Tok::Colon)) {
      advance();
      children.push_back(type_ref());
    }
    expect(Tok::Arrow, "'=>'");
    children.push_back(block());
    --closure_depth_;
    inflight_ = outer_inflight;
    no_struct_ = saved_struct;
    return make(NodeKind::Closure, start, std::move(children), "inflight");
  }

  std::string_view src_;
  const LineIndex& lines_;
  std::vector<Token> toks_;
  std::size_t idx_ = 0;
  std::size_t last_end_ = 0;
  std::vector<SyntaxNode> nodes_;
  bool inflight_ = false;
  bool no_struct_ = false;
  int closure_depth_ = 0;
};

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Program: return "program";
    case NodeKind::Bring: return "bring";
    case NodeKind::LetBinding: return "let-binding";
    case NodeKind::IfLet: return "if-let";
    case NodeKind::Block: return "block";
    case NodeKind::Return: return "return";
    case NodeKind::ExpressionStatement: return "expression-statement";
    case NodeKind::ConstructorCall: return "constructor-call";
    case NodeKind::MethodCall: return "method-call";
    case NodeKind::Call: return "call";
    case NodeKind::MemberAccess: return "member-access";
    case NodeKind::Identifier: return "identifier";
    case NodeKind::Closure: return "closure";
    case NodeKind::Parameter: return "parameter";
    case NodeKind::TypeRef: return "type-ref";
    case NodeKind::String: return "string";
    case NodeKind::Number: return "number";
    case NodeKind::DurationLiteral: return "duration-literal";
    case NodeKind::Boolean: return "boolean";
    case NodeKind::Nil: return "nil";
    case NodeKind::ObjectLiteral: return "object-literal";
    case NodeKind::ObjectField: return "object-field";
    case NodeKind::StructLiteral: return "struct-literal";
    case NodeKind::ArrayLiteral: return "array-literal";
    case NodeKind::Index: return "index";
    case NodeKind::AnnotationWrapper: return "annotation-wrapper";
    case NodeKind::NamedArgument: return "named-argument";
  }
  return "unknown";
}

bool is_expression(NodeKind kind) {
  switch (kind) {
    case NodeKind::ConstructorCall:
    case NodeKind::MethodCall:
    case NodeKind::Call:
    case NodeKind::MemberAccess:
    case NodeKind::Identifier:
    case NodeKind::Closure:
    case NodeKind::String:
    case NodeKind::Number:
    case NodeKind::DurationLiteral:
    case NodeKind::Boolean:
    case NodeKind::Nil:
    case NodeKind::ObjectLiteral:
    case NodeKind::StructLiteral:
    case NodeKind::ArrayLiteral:
    case NodeKind::Index:
    case NodeKind::AnnotationWrapper:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(Phase phase) {
  return phase == Phase::Inflight ? "inflight" : "preflight";
}

std::string_view SyntaxTree::text_of(NodeId id) const {
  const Span& s = node(id).span;
  return std::string_view(source_->text).substr(s.start_byte, s.size());
}

NodeId SyntaxTree::innermost(const Span& span) const {
  NodeId cur = 0;
  for (;;) {
    NodeId next = kNoNode;
    for (NodeId c : nodes_[cur].children) {
      if (nodes_[c].span.contains(span)) {
        next = c;
        break;
      }
    }
    if (next == kNoNode) return cur;
    cur = next;
  }
}

NodeId SyntaxTree::exact(const Span& span) const {
  NodeId cur = 0;
  for (;;) {
    if (nodes_[cur].span.same_range(span)) return cur;
    NodeId next = kNoNode;
    for (NodeId c : nodes_[cur].children) {
      if (nodes_[c].span.contains(span)) {
        next = c;
        break;
      }
    }
    if (next == kNoNode) return kNoNode;
    cur = next;
  }
}

SyntaxTree parse(const SourceFile& source) {
  if (!is_valid_utf8(source.text)) {
    throw Error(ErrorCode::ParseError, "source is not valid UTF-8")
        .with_expectation("UTF-8 text", "invalid byte sequence");
  }
  auto file = std::make_shared<const SourceFile>(source);
  LineIndex lines(file->text);
  Lexer lexer(file->text, lines);
  Parser parser(file->text, lines, lexer.run());
  return SyntaxTree(file, parser.program());
}

SyntaxTree parse_expression(std::string_view text) {
  auto file = std::make_shared<const SourceFile>(SourceFile{"<expression>", std::string(text), 1});
  if (!is_valid_utf8(file->text)) throw Error(ErrorCode::ParseError, "expression is not valid UTF-8");
  LineIndex lines(file->text);
  Lexer lexer(file->text, lines);
  Parser parser(file->text, lines, lexer.run());
  return SyntaxTree(file, parser.single_expression());
}

Phase phase_of(const SyntaxTree& tree, const Span& span) {
  if (span.start_byte > span.end_byte || span.end_byte > tree.source().text.size()) {
    throw Error(ErrorCode::SpanOutOfRange, "span lies outside the source text").with_span(span);
  }
  return tree.node(tree.innermost(span)).phase;
}

}  // namespace penny::dsl
