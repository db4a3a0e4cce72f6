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
#include "penny/extractor.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "penny/error.hpp"

namespace penny {
namespace {

using dsl::NodeId;
using dsl::NodeKind;
using dsl::Phase;
using dsl::Scalar;
using dsl::SyntaxNode;
using dsl::SyntaxTree;

constexpr std::string_view kApiVerbs[] = {"get", "post", "put", "delete", "patch"};
constexpr std::string_view kHttpVerbs[] = {"get", "post", "put", "delete", "patch", "fetch"};
constexpr std::string_view kBuiltinNamespaces[] = {"std", "str", "cloud", "util", "http", "Json", "math"};
constexpr std::string_view kIgnoredCalls[] = {"log", "assert"};

template <std::size_t N>
bool one_of(const std::string_view (&set)[N], std::string_view s) {
  return std::find(std::begin(set), std::end(set), s) != std::end(set);
}

std::string span_id(std::string_view prefix, const Span& s) {
  return std::string(prefix) + "@" + std::to_string(s.start_byte) + "-" + std::to_string(s.end_byte);
}

std::optional<ResourceType> resource_type(std::string_view name) {
  if (name.substr(0, 6) == "cloud.") name.remove_prefix(6);
  if (name == "Api") return ResourceType::Api;
  if (name == "Bucket") return ResourceType::Bucket;
  if (name == "Queue") return ResourceType::Queue;
  if (name == "Table") return ResourceType::Table;
  if (name == "Schedule") return ResourceType::Schedule;
  if (name == "Function") return ResourceType::Function;
  return std::nullopt;
}

bool is_registration(ResourceType t, std::string_view method) {
  switch (t) {
    case ResourceType::Api: return one_of(kApiVerbs, method);
    case ResourceType::Bucket: return method == "onCreate";
    case ResourceType::Schedule: return method == "onTick";
    default: return false;
  }
}

bool is_billable(ResourceType t, std::string_view method) {
  switch (t) {
    case ResourceType::Bucket: return method == "put" || method == "get" || method == "list";
    case ResourceType::Queue: return method == "push" || method == "pop";
    case ResourceType::Table: return method == "insert" || method == "list" || method == "get";
    case ResourceType::Function: return method == "invoke";
    default: return false;
  }
}

NodeId unwrap(const SyntaxTree& t, NodeId id) {
  while (t.node(id).kind == NodeKind::AnnotationWrapper) id = t.node(t.node(id).children[0]).children[0];
  return id;
}

// Index of annotations by wrapper span.
class AnnotationIndex {
 public:
  explicit AnnotationIndex(const SyntaxTree& tree) : tree_(tree) {
    for (auto& a : dsl::read_annotations(tree))
      by_wrapper_[{a.wrapper_span.start_byte, a.wrapper_span.end_byte}] = std::move(a.entries);
  }

  // Entries of every wrapper directly around `id`; outer wrappers override.
  dsl::AnnotationEntries around(NodeId id) const {
    dsl::AnnotationEntries out;
    NodeId cur = id;
    for (;;) {
      NodeId array = tree_.node(cur).parent;
      if (array == dsl::kNoNode || tree_.node(array).kind != NodeKind::ArrayLiteral ||
          tree_.node(array).children.empty() || tree_.node(array).children[0] != cur)
        break;
      NodeId wrapper = tree_.node(array).parent;
      if (wrapper == dsl::kNoNode || tree_.node(wrapper).kind != NodeKind::AnnotationWrapper) break;
      const Span& ws = tree_.node(wrapper).span;
      auto it = by_wrapper_.find({ws.start_byte, ws.end_byte});
      if (it != by_wrapper_.end()) {
        for (const auto& [k, v] : it->second) {
          auto e = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == k; });
          if (e != out.end()) e->second = v;
          else out.emplace_back(k, v);
        }
      }
      cur = wrapper;
    }
    return out;
  }

 private:
  const SyntaxTree& tree_;
  std::map<std::pair<std::size_t, std::size_t>, dsl::AnnotationEntries> by_wrapper_;
};

std::optional<Scalar> scalar_of(const SyntaxTree& t, NodeId id) {
  id = unwrap(t, id);
  const SyntaxNode& n = t.node(id);
  switch (n.kind) {
    case NodeKind::Number: return Scalar::of_number(n.number);
    case NodeKind::String: return Scalar::of_string(n.text);
    case NodeKind::DurationLiteral: return Scalar::of_duration(n.number);
    case NodeKind::MethodCall: {
      // std.Duration.fromSeconds(1) and friends.
      if (n.children.size() != 2) return std::nullopt;
      const SyntaxNode& recv = t.node(n.children[0]);
      const SyntaxNode& arg = t.node(unwrap(t, n.children[1]));
      if (recv.kind != NodeKind::MemberAccess || recv.text != "Duration" || arg.kind != NodeKind::Number)
        return std::nullopt;
      if (n.text == "fromSeconds") return Scalar::of_duration(arg.number);
      if (n.text == "fromMinutes") return Scalar::of_duration(arg.number * 60);
      if (n.text == "fromHours") return Scalar::of_duration(arg.number * 3600);
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

// Named arguments plus fields of struct/object literal arguments.
std::vector<std::pair<std::string, Scalar>> props_of(const SyntaxTree& t, const SyntaxNode& call,
                                                     std::size_t first_arg) {
  std::vector<std::pair<std::string, Scalar>> out;
  std::size_t positional = 0;
  for (std::size_t i = first_arg; i < call.children.size(); ++i) {
    NodeId arg = unwrap(t, call.children[i]);
    const SyntaxNode& a = t.node(arg);
    if (a.kind == NodeKind::NamedArgument) {
      if (auto s = scalar_of(t, a.children[0])) out.emplace_back(a.text, *s);
    } else if (a.kind == NodeKind::StructLiteral || a.kind == NodeKind::ObjectLiteral) {
      for (NodeId f : a.children)
        if (auto s = scalar_of(t, t.node(f).children[0])) out.emplace_back(t.node(f).text, *s);
      ++positional;
    } else {
      if (auto s = scalar_of(t, arg)) out.emplace_back("arg" + std::to_string(positional), *s);
      ++positional;
    }
  }
  return out;
}

const Scalar* find_prop(const std::vector<std::pair<std::string, Scalar>>& props, std::string_view key) {
  for (const auto& [k, v] : props)
    if (k == key) return &v;
  return nullptr;
}

std::optional<Rational> numeric_entry(const dsl::AnnotationEntries& entries, std::string_view key,
                                      const Span& where) {
  const Scalar* s = dsl::find_entry(entries, key);
  if (!s) return std::nullopt;
  if (s->kind == Scalar::Kind::String) {
    throw Error(ErrorCode::MalformedAnnotation, "annotation '" + std::string(key) + "' must be numeric")
        .with_span(where);
  }
  return s->number;
}

std::vector<NodeId> preorder(const SyntaxTree& t) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    out.push_back(id);
    const auto& ch = t.node(id).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::optional<Span> enclosing_closure(const SyntaxTree& t, NodeId id) {
  for (NodeId cur = t.node(id).parent; cur != dsl::kNoNode; cur = t.node(cur).parent)
    if (t.node(cur).kind == NodeKind::Closure) return t.node(cur).span;
  return std::nullopt;
}

// The LetBinding whose value is `id`, looking through annotation wrappers.
const SyntaxNode* binding_of(const SyntaxTree& t, NodeId id) {
  NodeId cur = id;
  for (;;) {
    NodeId p = t.node(cur).parent;
    if (p == dsl::kNoNode) return nullptr;
    const SyntaxNode& pn = t.node(p);
    if (pn.kind == NodeKind::LetBinding) return pn.children.back() == cur ? &pn : nullptr;
    if (pn.kind == NodeKind::ArrayLiteral && pn.children[0] == cur && pn.parent != dsl::kNoNode &&
        t.node(pn.parent).kind == NodeKind::AnnotationWrapper) {
      cur = pn.parent;
      continue;
    }
    return nullptr;
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string base_name(const ResourceDecl& d) {
  return d.binding_name.empty() ? lower(to_string(d.type)) : d.binding_name;
}

// ---------------------------------------------------------------------------
// Usage resolution

struct Binding {
  enum class Kind { Resource, Value, Local };
  Kind kind = Kind::Value;
  std::string resource_id;
};

class Resolver {
 public:
  Resolver(const SyntaxTree& tree, const std::vector<ResourceDecl>& decls)
      : tree_(tree), annotations_(tree) {
    for (const auto& d : decls) {
      if (d.node != dsl::kNoNode && !d.implicit) decl_by_node_[d.node] = &d;
      by_id_[d.id] = &d;
    }
  }

  std::vector<ResourceCall> run() {
    scopes_.emplace_back();
    for (NodeId s : tree_.root().children) statement(s);
    return std::move(calls_);
  }

 private:
  const Binding* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  void statement(NodeId id) {
    const SyntaxNode& n = tree_.node(id);
    switch (n.kind) {
      case NodeKind::LetBinding: {
        NodeId value = n.children.back();
        expression(value);
        NodeId v = unwrap(tree_, value);
        Binding b;
        const SyntaxNode& vn = tree_.node(v);
        if (vn.kind == NodeKind::ConstructorCall && decl_by_node_.count(v)) {
          b.kind = Binding::Kind::Resource;
          b.resource_id = decl_by_node_.at(v)->id;
        } else if (vn.kind == NodeKind::Identifier) {
          if (const Binding* src = lookup(vn.text); src && src->kind == Binding::Kind::Resource) b = *src;
        }
        scopes_.back()[n.text] = b;
        break;
      }
      case NodeKind::IfLet: {
        expression(n.children[0]);
        scopes_.emplace_back();
        scopes_.back()[n.text] = Binding{Binding::Kind::Local, {}};
        block(n.children[1]);
        scopes_.pop_back();
        if (n.children.size() > 2) block(n.children[2]);
        break;
      }
      case NodeKind::Return:
      case NodeKind::ExpressionStatement:
        for (NodeId c : n.children) expression(c);
        break;
      case NodeKind::Block: block(id); break;
      default: break;
    }
  }

  void block(NodeId id) {
    scopes_.emplace_back();
    for (NodeId s : tree_.node(id).children) statement(s);
    scopes_.pop_back();
  }

  void expression(NodeId id) {
    const SyntaxNode& n = tree_.node(id);
    switch (n.kind) {
      case NodeKind::Closure: {
        scopes_.emplace_back();
        for (NodeId c : n.children) {
          const SyntaxNode& cn = tree_.node(c);
          if (cn.kind == NodeKind::Parameter) scopes_.back()[cn.text] = Binding{Binding::Kind::Local, {}};
          if (cn.kind == NodeKind::Block) block(c);
        }
        scopes_.pop_back();
        return;
      }
      case NodeKind::MethodCall: method_call(id); break;
      case NodeKind::Call: bare_call(id); break;
      case NodeKind::TypeRef: return;
      default: break;
    }
    for (NodeId c : n.children) expression(c);
  }

  void record(NodeId id, std::string resource_id, std::string method, std::size_t first_arg) {
    const SyntaxNode& n = tree_.node(id);
    ResourceCall call;
    call.resource_id = std::move(resource_id);
    call.method = std::move(method);
    call.call_span = n.span;
    call.enclosing_closure = enclosing_closure(tree_, id);
    call.args_summary = props_of(tree_, n, first_arg);
    call.annotations = annotations_.around(id);
    call.node = id;
    calls_.push_back(std::move(call));
  }

  void require_phase(NodeId id, Phase want, const std::string& what) {
    if (tree_.node(id).phase != want) {
      throw Error(ErrorCode::PhaseMismatch,
                  what + (want == Phase::Inflight ? " must run inside an inflight closure"
                                                  : " must be called in preflight code"))
          .with_span(tree_.node(id).span);
    }
  }

  void external_call(NodeId id, std::string method, std::size_t first_arg) {
    require_phase(id, Phase::Inflight, method);
    record(id, std::string(kHttpResource), std::move(method), first_arg);
  }

  void method_call(NodeId id) {
    const SyntaxNode& n = tree_.node(id);
    NodeId recv = unwrap(tree_, n.children[0]);
    bool chained = false;
    while (tree_.node(recv).kind == NodeKind::MemberAccess) {
      chained = true;
      recv = unwrap(tree_, tree_.node(recv).children[0]);
    }
    const SyntaxNode& r = tree_.node(recv);
    if (r.kind != NodeKind::Identifier) return;  // call on a computed value
    const Binding* b = lookup(r.text);
    if (!b) {
      if (one_of(kBuiltinNamespaces, r.text)) {
        if (r.text == "http" && !chained && one_of(kHttpVerbs, n.text)) external_call(id, "http." + n.text, 1);
        return;
      }
      if (n.text == "onCreate" || n.text == "onTick") {
        throw Error(ErrorCode::DanglingTrigger, "'" + n.text + "' registered on undeclared resource '" + r.text + "'")
            .with_span(n.span);
      }
      throw Error(ErrorCode::UnresolvedReceiver, "'" + r.text + "' does not name a declared resource")
          .with_span(r.span);
    }
    if (b->kind == Binding::Kind::Local) return;
    if (b->kind == Binding::Kind::Value) {
      throw Error(ErrorCode::UnresolvedReceiver, "'" + r.text + "' is bound to a value that is not a resource")
          .with_span(r.span);
    }
    const ResourceDecl& d = *by_id_.at(b->resource_id);
    if (chained || (!is_registration(d.type, n.text) && !is_billable(d.type, n.text))) {
      throw Error(ErrorCode::UnsupportedMethod, std::string(to_string(d.type)) + "." + n.text + " is not supported")
          .with_span(n.span);
    }
    std::string what = std::string(to_string(d.type)) + "." + n.text;
    require_phase(id, is_registration(d.type, n.text) ? Phase::Preflight : Phase::Inflight, what);
    record(id, d.id, n.text, 1);
  }

  void bare_call(NodeId id) {
    const SyntaxNode& n = tree_.node(id);
    if (n.text == "httpPost") {
      external_call(id, "httpPost", 0);
      return;
    }
    if (one_of(kIgnoredCalls, n.text)) return;
    throw Error(ErrorCode::UnsupportedConstruct, "call to unknown function '" + n.text + "'").with_span(n.span);
  }

  const SyntaxTree& tree_;
  AnnotationIndex annotations_;
  std::unordered_map<NodeId, const ResourceDecl*> decl_by_node_;
  std::unordered_map<std::string, const ResourceDecl*> by_id_;
  std::vector<std::unordered_map<std::string, Binding>> scopes_;
  std::vector<ResourceCall> calls_;
};

// ---------------------------------------------------------------------------
// Graph construction

struct Anchor {
  std::string id;
  EdgeKind kind = EdgeKind::Sync;
};

class Builder {
 public:
  Builder(const SyntaxTree& tree, const std::vector<ResourceDecl>& decls,
          const std::vector<ResourceCall>& calls, const std::vector<TriggerRule>& rules)
      : tree_(tree), annotations_(tree), rules_(rules) {
    for (const auto& d : decls) {
      decls_[d.id] = &d;
      if (d.node != dsl::kNoNode && !d.implicit) decl_by_node_[d.node] = &d;
    }
    for (const auto& c : calls) call_by_node_[c.node] = &c;
  }

  CostGraph run() {
    for (NodeId s : tree_.root().children) preflight(s);
    link_triggers();
    link_diamonds();
    link_endpoints();
    add_entry_slots();
    for (auto& e : g_.edges) e.weight = edge_weight(e, [&](const std::string& k) { return default_value(k); });
    g_.reindex();
    return std::move(g_);
  }

 private:
  // ---- helpers ----

  std::string unique_key(std::string base) {
    if (used_keys_.insert(base).second) return base;
    for (int i = 2;; ++i) {
      std::string k = base + "#" + std::to_string(i);
      if (used_keys_.insert(k).second) return k;
    }
  }

  CostNode& add_node(std::string id, std::string label, NodeClass cls, const Span& span, std::string key) {
    CostNode n;
    n.id = std::move(id);
    n.label = std::move(label);
    n.node_class = cls;
    n.span = span;
    n.key = std::move(key);
    g_.nodes.push_back(std::move(n));
    return g_.nodes.back();
  }

  CostNode& node(const std::string& id) {
    for (auto& n : g_.nodes)
      if (n.id == id) return n;
    throw Error(ErrorCode::Internal, "unknown node " + id);
  }

  void add_slot(AssumptionSlot s) {
    if (slot_keys_.insert(s.key).second) g_.slots.push_back(std::move(s));
  }

  AssumptionSlot make_slot(std::string key, AssumptionRole role, FactorOrigin origin, const std::string& node,
                           const Span& anchor, std::string annotation_key, const dsl::AnnotationEntries& entries) {
    AssumptionSlot s;
    s.key = std::move(key);
    s.role = role;
    s.origin = origin;
    s.node = node;
    s.anchor = anchor;
    s.annotation = numeric_entry(entries, annotation_key, anchor);
    s.annotation_key = std::move(annotation_key);
    return s;
  }

  Rational default_value(const std::string& key) const {
    for (const auto& s : g_.slots) {
      if (s.key != key) continue;
      if (s.annotation) return *s.annotation;
      if (s.constant) return *s.constant;
      if (s.fallback) return *s.fallback;
    }
    return 1;
  }

  std::size_t add_edge(const std::string& from, const std::string& to, EdgeKind kind,
                       std::vector<WeightTerm> terms, std::string why) {
    FlowEdge e;
    e.from = from;
    e.to = to;
    e.kind = kind;
    e.terms = std::move(terms);
    e.justification = std::move(why);
    g_.edges.push_back(std::move(e));
    return g_.edges.size() - 1;
  }

  CostFactor factor(const CostNode& n, FactorKind kind, FactorOrigin origin, std::string_view u,
                    std::vector<std::string> keys = {}, Rational scale = 1) {
    CostFactor f;
    f.id = n.key + "." + std::string(u);
    f.kind = kind;
    f.origin = origin;
    f.unit = std::string(u);
    f.keys = std::move(keys);
    f.scale = scale;
    return f;
  }

  bool contains_calls(NodeId id) const {
    if (call_by_node_.count(id)) return true;
    const SyntaxNode& n = tree_.node(id);
    return std::any_of(n.children.begin(), n.children.end(), [&](NodeId c) { return contains_calls(c); });
  }

  // ---- preflight walk ----

  void preflight(NodeId id) {
    const SyntaxNode& n = tree_.node(id);
    if (n.kind == NodeKind::Closure) {
      if (contains_calls(id)) {
        throw Error(ErrorCode::UnsupportedConstruct,
                    "inflight closure is not passed to a registration or a Function constructor")
            .with_span(n.span);
      }
      return;
    }
    if (n.kind == NodeKind::ConstructorCall) {
      auto it = decl_by_node_.find(id);
      if (it != decl_by_node_.end() && it->second->type == ResourceType::Function) {
        explicit_function(id, *it->second);
        return;
      }
    }
    if (n.kind == NodeKind::MethodCall) {
      auto it = call_by_node_.find(id);
      if (it != call_by_node_.end()) {
        registration(id, *it->second);
        return;
      }
    }
    for (NodeId c : n.children) preflight(c);
  }

  // Closure argument of a registration or Function constructor, unwrapped.
  NodeId handler_arg(NodeId call, std::size_t index, const std::string& what) {
    const SyntaxNode& n = tree_.node(call);
    if (index >= n.children.size() || tree_.node(unwrap(tree_, n.children[index])).kind != NodeKind::Closure) {
      throw Error(ErrorCode::UnsupportedConstruct, what + " needs an inline inflight closure").with_span(n.span);
    }
    // Remaining arguments may still contain preflight calls.
    for (std::size_t i = 0; i < n.children.size(); ++i)
      if (i != index && i != 0) preflight(n.children[i]);
    return unwrap(tree_, n.children[index]);
  }

  NodeId closure_body(NodeId closure) { return tree_.node(closure).children.back(); }

  std::string function_node(const std::string& id, const Span& span, const std::string& key, const Span& anchor,
                            const dsl::AnnotationEntries& entries) {
    CostNode& fn = add_node(id, "fn", NodeClass::Function, span, key);
    fn.factors.push_back(factor(fn, FactorKind::Invocation, FactorOrigin::Internal, unit::kGbSecond,
                                {key + ".memoryGb", key + ".durationSeconds"}));
    add_slot(make_slot(key + ".memoryGb", AssumptionRole::MemoryGb, FactorOrigin::Internal, id, anchor, "memoryGb",
                       entries));
    add_slot(make_slot(key + ".durationSeconds", AssumptionRole::DurationSeconds, FactorOrigin::Internal, id, anchor,
                       "durationSeconds", entries));
    return id;
  }

  void explicit_function(NodeId ctor, const ResourceDecl& d) {
    NodeId closure = handler_arg(ctor, 0, "cloud.Function");
    // handler_arg skips argument 0 of method calls (the receiver); constructors have none.
    const SyntaxNode& cn = tree_.node(ctor);
    std::string key = unique_key(base_name(d));
    std::string id = function_node(span_id("function", cn.span), cn.span, key, cn.span, d.annotations);
    fn_by_decl_[d.id] = id;
    block(closure_body(closure), Anchor{id, EdgeKind::Sync}, {});
  }

  const TriggerRule* rule_for(ResourceType target, const std::string& registration) const {
    for (const auto& r : rules_)
      if (r.target_type == target && r.registration_method == registration) return &r;
    return nullptr;
  }

  void registration(NodeId id, const ResourceCall& call) {
    const ResourceDecl& d = *decls_.at(call.resource_id);
    const SyntaxNode& n = tree_.node(id);
    if (d.type == ResourceType::Api) {
      NodeId route_node = n.children.size() > 1 ? unwrap(tree_, n.children[1]) : dsl::kNoNode;
      if (route_node == dsl::kNoNode || tree_.node(route_node).kind != NodeKind::String) {
        throw Error(ErrorCode::UnsupportedConstruct, "route must be a string literal").with_span(n.span);
      }
      const std::string& route = tree_.node(route_node).text;
      NodeId closure = handler_arg(id, 2, "Api." + call.method);
      std::string key = unique_key(route_slug(route));
      std::string ep_id = span_id("endpoint", n.span);
      CostNode& ep = add_node(ep_id, route, NodeClass::Endpoint, n.span, key);
      ep.factors.push_back(factor(ep, FactorKind::Invocation, FactorOrigin::External, unit::kRequest));
      if (auto bytes = numeric_entry(call.annotations, "responseBytes", n.span)) {
        ep.factors.push_back(factor(ep, FactorKind::Invocation, FactorOrigin::External, unit::kGb,
                                    {key + ".responseBytes"}, Rational(1, 1'000'000'000)));
        add_slot(make_slot(key + ".responseBytes", AssumptionRole::ResponseBytes, FactorOrigin::External, ep_id,
                           n.span, "responseBytes", call.annotations));
      }
      endpoints_.push_back({lower(call.method), route, ep_id});
      entry_annotations_[ep_id] = call.annotations;
      const Span& cs = tree_.node(closure).span;
      std::string fn_id =
          function_node(span_id("function", cs), cs, unique_key(key + ".fn"), cs, annotations_.around(closure));
      const TriggerRule* rule = rule_for(ResourceType::Api, call.method);
      add_edge(ep_id, fn_id, rule ? rule->edge_kind : EdgeKind::Deferred, {}, "Api route handler");
      block(closure_body(closure), Anchor{fn_id, EdgeKind::Sync}, {});
      return;
    }
    if (d.type == ResourceType::Bucket) {
      NodeId closure = handler_arg(id, 1, "Bucket.onCreate");
      std::string anchor = "@trigger:" + std::to_string(triggers_.size());
      triggers_.push_back({d.id, call.method, anchor});
      block(closure_body(closure), Anchor{anchor, EdgeKind::Sync}, {});
      return;
    }
    if (d.type == ResourceType::Schedule) {
      NodeId closure = handler_arg(id, 1, "Schedule.onTick");
      std::string tick_id = span_id("tick", n.span);
      CostNode& tick = add_node(tick_id, "ScheduleTick", NodeClass::ScheduleTick, n.span,
                                unique_key(base_name(d) + ".tick"));
      std::string rate_key = base_name(d) + ".rateSeconds";
      tick.rate_key = rate_key;
      AssumptionSlot s = make_slot(rate_key, AssumptionRole::ScheduleRate, FactorOrigin::Internal, tick_id,
                                   d.decl_span, "rateSeconds", d.annotations);
      if (const Scalar* rate = find_prop(d.props, "rate"); rate && rate->kind != Scalar::Kind::String)
        s.constant = rate->number;
      add_slot(std::move(s));
      const TriggerRule* rule = rule_for(ResourceType::Schedule, "onTick");
      block(closure_body(closure), Anchor{tick_id, rule ? rule->edge_kind : EdgeKind::Deferred}, {});
      return;
    }
    throw Error(ErrorCode::Internal, "unhandled registration " + call.method);
  }

  // ---- inflight walk ----

  void block(NodeId id, const Anchor& a, const std::vector<WeightTerm>& terms) {
    for (NodeId s : tree_.node(id).children) inflight_statement(s, a, terms);
  }

  void inflight_statement(NodeId id, const Anchor& a, const std::vector<WeightTerm>& terms) {
    const SyntaxNode& n = tree_.node(id);
    switch (n.kind) {
      case NodeKind::LetBinding:
        inflight_expression(n.children.back(), a, terms);
        return;
      case NodeKind::Return:
      case NodeKind::ExpressionStatement:
        for (NodeId c : n.children) inflight_expression(c, a, terms);
        return;
      case NodeKind::IfLet:
        if_let(id, a, terms);
        return;
      default:
        throw Error(ErrorCode::UnsupportedConstruct, "statement not supported in inflight code").with_span(n.span);
    }
  }

  void inflight_expression(NodeId id, const Anchor& a, const std::vector<WeightTerm>& terms) {
    const SyntaxNode& n = tree_.node(id);
    if (n.kind == NodeKind::Closure) {
      if (contains_calls(id)) {
        throw Error(ErrorCode::UnsupportedConstruct, "nested closures with resource calls are not analyzed")
            .with_span(n.span);
      }
      return;
    }
    if (n.kind == NodeKind::ConstructorCall && decl_by_node_.count(id)) {
      throw Error(ErrorCode::PhaseMismatch, "resources must be constructed in preflight code").with_span(n.span);
    }
    if (auto it = call_by_node_.find(id); it != call_by_node_.end()) attach_call(*it->second, a, terms);
    for (NodeId c : n.children) inflight_expression(c, a, terms);
  }

  std::vector<WeightTerm> with(std::vector<WeightTerm> terms, WeightTerm t) {
    terms.push_back(std::move(t));
    return terms;
  }

  // Creates the node for a billable call and the edge from the anchor. Returns the node id.
  std::string attach_call(const ResourceCall& call, const Anchor& a, const std::vector<WeightTerm>& terms) {
    const Span& span = call.call_span;
    auto multiplicity = [&](const std::string& key, const std::string& node_id) {
      AssumptionSlot s = make_slot(key + ".multiplicity", AssumptionRole::Multiplicity, FactorOrigin::Internal,
                                   node_id, span, "multiplicity", call.annotations);
      s.fallback = Rational(1);
      add_slot(std::move(s));
      return with(terms, WeightTerm{key + ".multiplicity", false});
    };

    if (call.resource_id == kHttpResource) {
      std::string base = call.method;
      std::replace(base.begin(), base.end(), '.', '_');
      std::string key = unique_key(base);
      std::string id = span_id("http", span);
      CostNode& n = add_node(id, call.method, NodeClass::ExternalHttpCall, span, key);
      CostFactor f = factor(n, FactorKind::Invocation, FactorOrigin::External, unit::kCall);
      f.price_key = key + ".pricePerCall";
      n.factors.push_back(std::move(f));
      add_slot(make_slot(key + ".pricePerCall", AssumptionRole::PricePerCall, FactorOrigin::External, id, span,
                         "pricePerCall", call.annotations));
      if (const Scalar* link = dsl::find_entry(call.annotations, "callsEndpoint")) {
        if (link->kind != Scalar::Kind::String)
          throw Error(ErrorCode::MalformedAnnotation, "callsEndpoint must be a route string").with_span(span);
        links_.push_back({id, link->text, span});
      }
      add_edge(a.id, id, a.kind, multiplicity(key, id), "synchronous call");
      return id;
    }

    const ResourceDecl& d = *decls_.at(call.resource_id);
    std::string base = base_name(d);
    if (d.type == ResourceType::Function) {
      auto fn = fn_by_decl_.find(d.id);
      if (fn == fn_by_decl_.end())
        throw Error(ErrorCode::UnsupportedConstruct, "function invoked before its definition").with_span(span);
      std::string key = unique_key(base + ".invoke");
      add_edge(a.id, fn->second, a.kind, multiplicity(key, fn->second), "Function.invoke");
      return fn->second;
    }

    std::string key = unique_key(base + "." + call.method);
    std::string label = std::string(to_string(d.type)) + "." + call.method;
    NodeClass cls = d.type == ResourceType::Bucket  ? NodeClass::BucketOp
                    : d.type == ResourceType::Queue ? NodeClass::QueueOp
                                                    : NodeClass::TableOp;
    std::string prefix = d.type == ResourceType::Bucket ? "bucket" : d.type == ResourceType::Queue ? "queue" : "table";
    std::string id = span_id(prefix, span);
    CostNode& n = add_node(id, label, cls, span, key);
    if (d.type == ResourceType::Queue) {
      n.factors.push_back(factor(n, FactorKind::Invocation, FactorOrigin::Internal, unit::kRequest));
      if (call.method == "push") pushes_[d.id].push_back(id);
    } else if (call.method == "put") {
      n.factors.push_back(factor(n, FactorKind::Invocation, FactorOrigin::Internal, unit::kWriteRequest));
      n.factors.push_back(factor(n, FactorKind::Accumulating, FactorOrigin::External, unit::kGbMonth,
                                 {key + ".payloadBytes"}, Rational(1, 1'000'000'000)));
      add_slot(make_slot(key + ".payloadBytes", AssumptionRole::PayloadBytes, FactorOrigin::External, id, span,
                         "payloadBytes", call.annotations));
    } else if (call.method == "insert") {
      std::string record = base + ".averageRecordSize";
      n.factors.push_back(factor(n, FactorKind::Invocation, FactorOrigin::Internal, unit::kWriteRequest));
      n.factors.push_back(factor(n, FactorKind::Accumulating, FactorOrigin::External, unit::kGbMonth, {record},
                                 Rational(1, 1'000'000'000)));
      add_slot(make_slot(record, AssumptionRole::RecordBytes, FactorOrigin::External, id, d.decl_span,
                         "averageRecordSize", d.annotations));
    } else {
      n.factors.push_back(factor(n, FactorKind::Invocation, FactorOrigin::Internal, unit::kReadRequest));
    }
    if (d.type == ResourceType::Bucket) sources_[{d.id, call.method}].push_back(id);
    add_edge(a.id, id, a.kind, multiplicity(key, id), "synchronous call");
    return id;
  }

  void if_let(NodeId id, const Anchor& a, const std::vector<WeightTerm>& terms) {
    const SyntaxNode& n = tree_.node(id);
    NodeId cond_raw = n.children[0];
    NodeId cond = unwrap(tree_, cond_raw);
    auto it = call_by_node_.find(cond);
    if (it != call_by_node_.end() && it->second->method == "pop" &&
        decls_.at(it->second->resource_id)->type == ResourceType::Queue) {
      if (n.children.size() > 2) {
        throw Error(ErrorCode::UnsupportedConstruct, "'else' arm on a queue pop is not supported")
            .with_span(tree_.node(n.children[2]).span);
      }
      const ResourceCall& pop = *it->second;
      std::string pop_id = attach_call(pop, a, terms);
      // Arguments of the pop call may contain further calls.
      for (std::size_t i = 1; i < tree_.node(cond).children.size(); ++i)
        inflight_expression(tree_.node(cond).children[i], a, terms);
      const std::string& pop_key = node(pop_id).key;
      std::string diamond_id = span_id("diamond", n.span);
      add_node(diamond_id, "Diamond", NodeClass::Diamond, n.span, unique_key(pop_key + ".diamond"));
      std::size_t secondary =
          add_edge(pop_id, diamond_id, EdgeKind::ImplicitSecondary, {}, "pop reaches the non-empty branch");
      g_.diamonds.push_back(DiamondInfo{diamond_id, {}, {secondary}});
      consumers_[pop.resource_id].push_back({diamond_id, pop_key, pop_id, pop.call_span, pop.annotations});
      block(n.children[1], Anchor{diamond_id, EdgeKind::Sync}, {});
      return;
    }

    inflight_expression(cond_raw, a, terms);
    std::string prefix = it != call_by_node_.end() ? last_key_for(cond) : unique_key("if_" + n.text);
    std::string pkey = prefix + ".probability";
    AssumptionSlot s = make_slot(pkey, AssumptionRole::Probability, FactorOrigin::Internal, a.id,
                                 tree_.node(cond).span, "probability", annotations_.around(cond));
    s.fallback = Rational(1);
    add_slot(std::move(s));
    block(n.children[1], a, with(terms, WeightTerm{pkey, false}));
    if (n.children.size() > 2) block(n.children[2], a, with(terms, WeightTerm{pkey, true}));
  }

  // Key of the node created for the call at `call_node`.
  std::string last_key_for(NodeId call_node) {
    const Span& s = tree_.node(call_node).span;
    for (auto it = g_.nodes.rbegin(); it != g_.nodes.rend(); ++it)
      if (it->span.same_range(s) && it->node_class != NodeClass::Diamond) return it->key;
    return unique_key("if");
  }

  // ---- linking ----

  void link_triggers() {
    for (const auto& t : triggers_) {
      const TriggerRule* rule = rule_for(decls_.at(t.resource)->type, t.registration);
      std::vector<FlowEdge> heads;
      for (const auto& e : g_.edges)
        if (e.from == t.anchor) heads.push_back(e);
      g_.edges.erase(std::remove_if(g_.edges.begin(), g_.edges.end(),
                                    [&](const FlowEdge& e) { return e.from == t.anchor; }),
                     g_.edges.end());
      if (!rule) continue;
      auto src = sources_.find({t.resource, rule->source_method});
      if (src == sources_.end()) continue;
      for (const std::string& from : src->second) {
        for (const auto& h : heads) {
          add_edge(from, h.to, rule->edge_kind, h.terms,
                   std::string(to_string(rule->source_type)) + "." + rule->source_method + " triggers " +
                       rule->registration_method + " handler");
        }
      }
    }
    // Secondary edge indices may have shifted after erasing trigger edges.
    for (auto& d : g_.diamonds) {
      d.secondary.clear();
      for (std::size_t i = 0; i < g_.edges.size(); ++i)
        if (g_.edges[i].to == d.node && g_.edges[i].kind == EdgeKind::ImplicitSecondary) d.secondary.push_back(i);
    }
  }

  void link_diamonds() {
    for (auto& [queue, consumers] : consumers_) {
      const TriggerRule* rule = nullptr;
      for (const auto& r : rules_)
        if (r.source_type == ResourceType::Queue && r.target_type == ResourceType::Queue &&
            r.registration_method == "pop")
          rule = &r;
      Rational share(1, static_cast<std::int64_t>(consumers.size()));
      for (const auto& c : consumers) {
        std::string share_key = c.pop_key + ".consumerShare";
        AssumptionSlot s = make_slot(share_key, AssumptionRole::ConsumerShare, FactorOrigin::Internal, c.pop_id,
                                     c.pop_span, "consumerShare", c.annotations);
        s.fallback = share;
        add_slot(std::move(s));
        if (!rule) continue;
        auto& info = *std::find_if(g_.diamonds.begin(), g_.diamonds.end(),
                                   [&](const DiamondInfo& d) { return d.node == c.diamond; });
        auto pushes = pushes_.find(queue);
        if (pushes == pushes_.end()) continue;
        for (const std::string& push : pushes->second) {
          info.dominant.push_back(add_edge(push, c.diamond, EdgeKind::ImplicitDominant, {WeightTerm{share_key, false}},
                                           "Queue.push feeds Queue.pop"));
        }
      }
    }
  }

  void link_endpoints() {
    for (const auto& link : links_) {
      std::string_view rest = link.routes;
      while (!rest.empty()) {
        auto comma = rest.find(',');
        std::string_view item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item.empty()) continue;
        std::string method;
        std::string_view path = item;
        if (auto sp = item.find(' '); sp != std::string_view::npos) {
          method = lower(item.substr(0, sp));
          path = item.substr(sp + 1);
        }
        std::vector<std::string> matches;
        for (const auto& ep : endpoints_)
          if (ep.route == path && (method.empty() || ep.method == method)) matches.push_back(ep.node);
        if (matches.size() != 1) {
          throw Error(ErrorCode::UnknownRoute, matches.empty() ? "callsEndpoint names unknown route '" +
                                                                     std::string(item) + "'"
                                                               : "callsEndpoint route '" + std::string(item) +
                                                                     "' is ambiguous; prefix it with the method")
              .with_span(link.span);
        }
        add_edge(link.node, matches[0], EdgeKind::Deferred, {}, "callsEndpoint annotation");
      }
    }
  }

  void add_entry_slots() {
    std::set<std::string> targeted;
    for (const auto& e : g_.edges) targeted.insert(e.to);
    for (auto& n : g_.nodes) {
      if (targeted.count(n.id) || n.node_class == NodeClass::ScheduleTick) continue;
      dsl::AnnotationEntries entries;
      std::string local = "invocationsPerMonth";
      if (n.node_class == NodeClass::Endpoint) {
        entries = entry_annotations_[n.id];
        local = "requestsPerMonth";
      } else {
        for (const auto& [node_id, e] : call_annotations_for_span(n.span)) entries = e, (void)node_id;
      }
      n.rate_key = n.key + "." + local;
      add_slot(make_slot(n.rate_key, AssumptionRole::EntryRate, FactorOrigin::External, n.id, n.span, local,
                         entries));
    }
  }

  std::vector<std::pair<std::string, dsl::AnnotationEntries>> call_annotations_for_span(const Span& s) {
    NodeId id = tree_.exact(s);
    if (id == dsl::kNoNode) return {};
    return {{"", annotations_.around(id)}};
  }

  struct Trigger {
    std::string resource;
    std::string registration;
    std::string anchor;
  };
  struct Consumer {
    std::string diamond;
    std::string pop_key;
    std::string pop_id;
    Span pop_span;
    dsl::AnnotationEntries annotations;
  };
  struct EndpointRef {
    std::string method;
    std::string route;
    std::string node;
  };
  struct Link {
    std::string node;
    std::string routes;
    Span span;
  };

  const SyntaxTree& tree_;
  AnnotationIndex annotations_;
  const std::vector<TriggerRule>& rules_;
  std::unordered_map<std::string, const ResourceDecl*> decls_;
  std::unordered_map<NodeId, const ResourceDecl*> decl_by_node_;
  std::unordered_map<NodeId, const ResourceCall*> call_by_node_;
  CostGraph g_;
  std::set<std::string> used_keys_;
  std::set<std::string> slot_keys_;
  std::map<std::string, std::string> fn_by_decl_;
  std::vector<Trigger> triggers_;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> sources_;
  std::map<std::string, std::vector<std::string>> pushes_;
  std::map<std::string, std::vector<Consumer>> consumers_;
  std::vector<EndpointRef> endpoints_;
  std::vector<Link> links_;
  std::map<std::string, dsl::AnnotationEntries> entry_annotations_;
};

}  // namespace

std::string_view to_string(ResourceType t) {
  switch (t) {
    case ResourceType::Api: return "Api";
    case ResourceType::Bucket: return "Bucket";
    case ResourceType::Queue: return "Queue";
    case ResourceType::Table: return "Table";
    case ResourceType::Schedule: return "Schedule";
    case ResourceType::Function: return "Function";
  }
  return "Unknown";
}

std::string route_slug(std::string_view route) {
  std::string out;
  bool sep = false;
  for (char c : route) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      if (sep && !out.empty()) out += '_';
      sep = false;
      out += c;
    } else {
      sep = true;
    }
  }
  return out.empty() ? "root" : out;
}

const std::vector<TriggerRule>& default_trigger_rules() {
  static const std::vector<TriggerRule> rules = {
      {ResourceType::Api, "request", ResourceType::Api, "get", EdgeKind::Deferred},
      {ResourceType::Api, "request", ResourceType::Api, "post", EdgeKind::Deferred},
      {ResourceType::Api, "request", ResourceType::Api, "put", EdgeKind::Deferred},
      {ResourceType::Api, "request", ResourceType::Api, "delete", EdgeKind::Deferred},
      {ResourceType::Api, "request", ResourceType::Api, "patch", EdgeKind::Deferred},
      {ResourceType::Bucket, "put", ResourceType::Bucket, "onCreate", EdgeKind::Deferred},
      {ResourceType::Schedule, "tick", ResourceType::Schedule, "onTick", EdgeKind::Deferred},
      {ResourceType::Queue, "push", ResourceType::Queue, "pop", EdgeKind::ImplicitDominant},
  };
  return rules;
}

std::vector<ResourceDecl> find_resources(const SyntaxTree& tree) {
  AnnotationIndex annotations(tree);
  std::vector<ResourceDecl> out;
  std::map<std::string, std::size_t> top_level;  // binding -> decl index, for route handlers
  for (NodeId id : preorder(tree)) {
    const SyntaxNode& n = tree.node(id);
    if (n.kind != NodeKind::ConstructorCall) continue;
    auto type = resource_type(n.text);
    if (!type) {
      throw Error(ErrorCode::UnsupportedResource, "unsupported resource type '" + n.text + "'").with_span(n.span);
    }
    if (n.phase != Phase::Preflight) {
      throw Error(ErrorCode::PhaseMismatch, "resources must be constructed in preflight code").with_span(n.span);
    }
    ResourceDecl d;
    d.type = *type;
    d.decl_span = n.span;
    d.node = id;
    d.id = span_id(lower(to_string(*type)), n.span);
    if (const SyntaxNode* let = binding_of(tree, id)) d.binding_name = let->text;
    d.props = props_of(tree, n, 0);
    d.annotations = annotations.around(id);
    out.push_back(std::move(d));
  }

  // Aliases by lexical order at top level.
  std::map<std::string, std::string> names;  // binding -> decl id
  std::map<NodeId, std::string> decl_of_node;
  for (const auto& d : out) decl_of_node[d.node] = d.id;
  std::vector<ResourceDecl> implicit;
  std::map<std::string, ResourceType> type_of;
  for (const auto& d : out) type_of[d.id] = d.type;
  for (NodeId id : preorder(tree)) {
    const SyntaxNode& n = tree.node(id);
    if (n.kind == NodeKind::LetBinding && n.phase == Phase::Preflight) {
      NodeId v = unwrap(tree, n.children.back());
      const SyntaxNode& vn = tree.node(v);
      if (vn.kind == NodeKind::ConstructorCall) names[n.text] = decl_of_node[v];
      else if (vn.kind == NodeKind::Identifier && names.count(vn.text)) names[n.text] = names[vn.text];
      else names.erase(n.text);
      continue;
    }
    if (n.kind != NodeKind::MethodCall || n.phase != Phase::Preflight || !one_of(kApiVerbs, n.text)) continue;
    NodeId recv = unwrap(tree, n.children[0]);
    if (tree.node(recv).kind != NodeKind::Identifier) continue;
    auto it = names.find(tree.node(recv).text);
    if (it == names.end() || type_of[it->second] != ResourceType::Api) continue;
    if (n.children.size() < 3) continue;
    NodeId closure = unwrap(tree, n.children[2]);
    if (tree.node(closure).kind != NodeKind::Closure) continue;
    ResourceDecl d;
    d.type = ResourceType::Function;
    d.implicit = true;
    d.decl_span = tree.node(closure).span;
    d.node = closure;
    d.id = span_id("function", d.decl_span);
    d.annotations = annotations.around(closure);
    implicit.push_back(std::move(d));
  }
  out.insert(out.end(), implicit.begin(), implicit.end());
  std::stable_sort(out.begin(), out.end(), [](const ResourceDecl& a, const ResourceDecl& b) {
    return a.decl_span.start_byte < b.decl_span.start_byte;
  });
  return out;
}

std::vector<ResourceCall> resolve_usages(const SyntaxTree& tree, const std::vector<ResourceDecl>& resources) {
  return Resolver(tree, resources).run();
}

CostGraph build_graph(const SyntaxTree& tree, const std::vector<ResourceDecl>& resources,
                      const std::vector<ResourceCall>& calls, const std::vector<TriggerRule>& rules) {
  return Builder(tree, resources, calls, rules).run();
}

CostGraph extract(const SyntaxTree& tree) {
  auto resources = find_resources(tree);
  auto calls = resolve_usages(tree, resources);
  return build_graph(tree, resources, calls);
}

}  // namespace penny
