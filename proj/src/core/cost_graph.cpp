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
#include "penny/cost_graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "penny/error.hpp"

namespace penny {
namespace {

using json = nlohmann::ordered_json;

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::pair<Enum, std::string_view> (&table)[N], std::string_view s) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  return std::nullopt;
}

const std::pair<NodeClass, std::string_view> kClasses[] = {
    {NodeClass::Endpoint, "Endpoint"},
    {NodeClass::Function, "Function"},
    {NodeClass::BucketOp, "BucketOp"},
    {NodeClass::QueueOp, "QueueOp"},
    {NodeClass::TableOp, "TableOp"},
    {NodeClass::ScheduleTick, "ScheduleTick"},
    {NodeClass::ExternalHttpCall, "ExternalHttpCall"},
    {NodeClass::Diamond, "Diamond"},
};
const std::pair<FactorKind, std::string_view> kKinds[] = {
    {FactorKind::Invocation, "invocation"},
    {FactorKind::Fixed, "fixed"},
    {FactorKind::Accumulating, "accumulating"},
};
const std::pair<FactorOrigin, std::string_view> kOrigins[] = {
    {FactorOrigin::External, "external"},
    {FactorOrigin::Internal, "internal"},
};
const std::pair<EdgeKind, std::string_view> kEdges[] = {
    {EdgeKind::Sync, "sync"},
    {EdgeKind::Deferred, "deferred"},
    {EdgeKind::ImplicitDominant, "implicit_dominant"},
    {EdgeKind::ImplicitSecondary, "implicit_secondary"},
};
const std::pair<AssumptionRole, std::string_view> kRoles[] = {
    {AssumptionRole::EntryRate, "entry-rate"},
    {AssumptionRole::MemoryGb, "memory-gb"},
    {AssumptionRole::DurationSeconds, "duration-seconds"},
    {AssumptionRole::PayloadBytes, "payload-bytes"},
    {AssumptionRole::RecordBytes, "record-bytes"},
    {AssumptionRole::ResponseBytes, "response-bytes"},
    {AssumptionRole::PricePerCall, "price-per-call"},
    {AssumptionRole::ScheduleRate, "schedule-rate"},
    {AssumptionRole::Multiplicity, "multiplicity"},
    {AssumptionRole::Probability, "probability"},
    {AssumptionRole::ConsumerShare, "consumer-share"},
};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::pair<Enum, std::string_view> (&table)[N], Enum e) {
  for (const auto& [k, name] : table)
    if (k == e) return name;
  return "unknown";
}

template <typename Enum, std::size_t N>
Enum parse_enum(const std::pair<Enum, std::string_view> (&table)[N], const json& j, const char* what) {
  auto e = lookup(table, j.get<std::string>());
  if (!e) throw Error(ErrorCode::InvalidArgument, std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *e;
}

json span_json(const Span& s) {
  return json{{"start_byte", s.start_byte}, {"end_byte", s.end_byte}, {"start_line", s.start_line},
              {"start_col", s.start_col},   {"end_line", s.end_line},   {"end_col", s.end_col}};
}

Span span_from(const json& j) {
  Span s;
  s.start_byte = j.at("start_byte").get<std::size_t>();
  s.end_byte = j.at("end_byte").get<std::size_t>();
  s.start_line = j.at("start_line").get<std::uint32_t>();
  s.start_col = j.at("start_col").get<std::uint32_t>();
  s.end_line = j.at("end_line").get<std::uint32_t>();
  s.end_col = j.at("end_col").get<std::uint32_t>();
  return s;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

bool has_unit(const CostNode& n, std::string_view u, FactorKind kind) {
  return std::any_of(n.factors.begin(), n.factors.end(),
                     [&](const CostFactor& f) { return f.unit == u && f.kind == kind; });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string_view to_string(NodeClass c) { return name_of(kClasses, c); }
std::optional<NodeClass> node_class_from_string(std::string_view s) { return lookup(kClasses, s); }
std::string_view to_string(FactorKind k) { return name_of(kKinds, k); }
std::string_view to_string(FactorOrigin o) { return name_of(kOrigins, o); }
std::string_view to_string(EdgeKind k) { return name_of(kEdges, k); }
std::string_view to_string(AssumptionRole r) { return name_of(kRoles, r); }

void CostGraph::reindex() {
  node_index_.clear();
  slot_index_.clear();
  for (std::size_t i = 0; i < nodes.size(); ++i) node_index_.emplace(nodes[i].id, i);
  for (std::size_t i = 0; i < slots.size(); ++i) slot_index_.emplace(slots[i].key, i);
}

const CostNode* CostGraph::find(std::string_view id) const {
  auto i = index_of(id);
  return i ? &nodes[*i] : nullptr;
}

std::optional<std::size_t> CostGraph::index_of(std::string_view id) const {
  auto it = node_index_.find(std::string(id));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

const AssumptionSlot* CostGraph::slot(std::string_view key) const {
  auto it = slot_index_.find(std::string(key));
  return it == slot_index_.end() ? nullptr : &slots[it->second];
}

std::vector<std::size_t> CostGraph::in_edges(std::string_view id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edges[i].to == id) out.push_back(i);
  return out;
}

std::vector<std::size_t> CostGraph::out_edges(std::string_view id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edges[i].from == id) out.push_back(i);
  return out;
}

std::vector<const CostNode*> entry_points(const CostGraph& graph) {
  std::set<std::string_view> targeted;
  for (const auto& e : graph.edges) targeted.insert(e.to);
  std::vector<const CostNode*> out;
  for (const auto& n : graph.nodes)
    if (!targeted.count(n.id)) out.push_back(&n);
  if (out.empty() && !graph.nodes.empty()) {
    throw Error(ErrorCode::NoEntryPoints, "every node has an incoming edge; the graph has no entry point");
  }
  return out;
}

std::vector<Finding> validate(const CostGraph& graph) {
  std::vector<Finding> out;
  std::set<std::string> ids;
  for (const auto& n : graph.nodes) {
    if (!ids.insert(n.id).second) out.push_back({"DuplicateNode", n.id, "node id is not unique"});
  }

  auto missing = [&](const CostNode& n, std::string_view what) {
    out.push_back({"MissingFactor", n.id, n.label + " lacks its " + std::string(what) + " factor"});
  };
  for (const auto& n : graph.nodes) {
    switch (n.node_class) {
      case NodeClass::Endpoint:
      case NodeClass::QueueOp:
        if (!has_unit(n, unit::kRequest, FactorKind::Invocation)) missing(n, "request");
        break;
      case NodeClass::Function: {
        const CostFactor* gbs = nullptr;
        for (const auto& f : n.factors)
          if (f.unit == unit::kGbSecond) gbs = &f;
        if (!gbs) {
          missing(n, "GB-second");
          break;
        }
        bool mem = false;
        bool dur = false;
        for (const auto& k : gbs->keys) {
          const AssumptionSlot* s = graph.slot(k);
          if (!s) continue;
          mem |= s->role == AssumptionRole::MemoryGb;
          dur |= s->role == AssumptionRole::DurationSeconds;
        }
        if (!mem) missing(n, "memory");
        if (!dur) missing(n, "duration");
        break;
      }
      case NodeClass::BucketOp:
      case NodeClass::TableOp:
        if (ends_with(n.label, ".put") || ends_with(n.label, ".insert")) {
          if (!has_unit(n, unit::kWriteRequest, FactorKind::Invocation)) missing(n, "write-request");
          if (!has_unit(n, unit::kGbMonth, FactorKind::Accumulating)) missing(n, "storage");
        } else if (!has_unit(n, unit::kReadRequest, FactorKind::Invocation)) {
          missing(n, "read-request");
        }
        break;
      case NodeClass::ExternalHttpCall:
        if (!has_unit(n, unit::kCall, FactorKind::Invocation)) missing(n, "per-call price");
        break;
      case NodeClass::ScheduleTick:
      case NodeClass::Diamond:
        break;
    }
  }

  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const FlowEdge& e = graph.edges[i];
    const CostNode* from = graph.find(e.from);
    const CostNode* to = graph.find(e.to);
    if (!from) out.push_back({"DanglingEdge", e.from, "edge source does not exist"});
    if (!to) out.push_back({"DanglingEdge", e.to, "edge target does not exist"});
    if (e.weight < Rational(0)) out.push_back({"NegativeWeight", e.from + "->" + e.to, "edge weight is negative"});
    bool implicit = e.kind == EdgeKind::ImplicitDominant || e.kind == EdgeKind::ImplicitSecondary;
    if (to && implicit != (to->node_class == NodeClass::Diamond)) {
      out.push_back({"MalformedDiamond", e.to,
                     implicit ? "implicit edge enters a non-diamond node" : "diamond entered by a plain edge"});
    }
  }

  std::set<std::string> seen_diamonds;
  std::vector<int> covered(graph.edges.size(), 0);
  for (const auto& d : graph.diamonds) {
    seen_diamonds.insert(d.node);
    const CostNode* n = graph.find(d.node);
    if (!n || n->node_class != NodeClass::Diamond) {
      out.push_back({"MalformedDiamond", d.node, "diamond entry does not name a Diamond node"});
      continue;
    }
    auto check = [&](const std::vector<std::size_t>& list, EdgeKind kind) {
      for (std::size_t idx : list) {
        if (idx >= graph.edges.size() || graph.edges[idx].to != d.node || graph.edges[idx].kind != kind) {
          out.push_back({"MalformedDiamond", d.node, "diamond edge list does not match its in-edges"});
          continue;
        }
        ++covered[idx];
      }
    };
    check(d.dominant, EdgeKind::ImplicitDominant);
    check(d.secondary, EdgeKind::ImplicitSecondary);
    if (d.secondary.empty()) out.push_back({"MalformedDiamond", d.node, "diamond has no secondary in-edge"});
  }
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const FlowEdge& e = graph.edges[i];
    bool implicit = e.kind == EdgeKind::ImplicitDominant || e.kind == EdgeKind::ImplicitSecondary;
    if (implicit && covered[i] != 1)
      out.push_back({"MalformedDiamond", e.to, "implicit edge is not listed in exactly one diamond"});
  }
  for (const auto& n : graph.nodes) {
    if (n.node_class == NodeClass::Diamond && !seen_diamonds.count(n.id))
      out.push_back({"MalformedDiamond", n.id, "Diamond node has no diamond entry"});
  }
  return out;
}

std::string graph_to_json(const CostGraph& graph, int indent) {
  json doc;
  doc["schema"] = "penny.graph/1";
  json nodes = json::array();
  for (const auto& n : graph.nodes) {
    json factors = json::array();
    for (const auto& f : n.factors) {
      json jf{{"id", f.id},       {"kind", to_string(f.kind)}, {"origin", to_string(f.origin)},
              {"unit", f.unit},   {"scale", f.scale.str()},    {"keys", f.keys}};
      if (!f.price_key.empty()) jf["price_key"] = f.price_key;
      factors.push_back(std::move(jf));
    }
    nodes.push_back(json{{"id", n.id},
                         {"label", n.label},
                         {"class", to_string(n.node_class)},
                         {"span", span_json(n.span)},
                         {"key", n.key},
                         {"factors", std::move(factors)},
                         {"rate_key", n.rate_key}});
  }
  doc["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : graph.edges) {
    json terms = json::array();
    for (const auto& t : e.terms) terms.push_back(json{{"key", t.key}, {"complement", t.complement}});
    edges.push_back(json{{"from", e.from},
                         {"to", e.to},
                         {"kind", to_string(e.kind)},
                         {"weight", e.weight.str()},
                         {"weight_terms", std::move(terms)},
                         {"justification", e.justification}});
  }
  doc["edges"] = std::move(edges);
  json diamonds = json::array();
  for (const auto& d : graph.diamonds)
    diamonds.push_back(json{{"node", d.node}, {"dominant", d.dominant}, {"secondary", d.secondary}});
  doc["diamonds"] = std::move(diamonds);
  json slots = json::array();
  for (const auto& s : graph.slots) {
    json js{{"key", s.key},
            {"role", to_string(s.role)},
            {"origin", to_string(s.origin)},
            {"node", s.node},
            {"anchor", span_json(s.anchor)},
            {"annotation_key", s.annotation_key}};
    if (s.annotation) js["annotation"] = s.annotation->str();
    if (s.constant) js["constant"] = s.constant->str();
    if (s.fallback) js["default"] = s.fallback->str();
    slots.push_back(std::move(js));
  }
  doc["assumptions"] = std::move(slots);
  json entries = json::array();
  std::set<std::string_view> targeted;
  for (const auto& e : graph.edges) targeted.insert(e.to);
  for (const auto& n : graph.nodes)
    if (!targeted.count(n.id)) entries.push_back(n.id);
  doc["entry_points"] = std::move(entries);
  return doc.dump(indent) + "\n";
}

CostGraph graph_from_json(std::string_view text) {
  CostGraph g;
  try {
    json doc = json::parse(text);
    if (doc.at("schema") != "penny.graph/1") throw Error(ErrorCode::InvalidArgument, "unsupported graph schema");
    for (const auto& jn : doc.at("nodes")) {
      CostNode n;
      n.id = jn.at("id").get<std::string>();
      n.label = jn.at("label").get<std::string>();
      n.node_class = parse_enum(kClasses, jn.at("class"), "node class");
      n.span = span_from(jn.at("span"));
      n.key = jn.at("key").get<std::string>();
      for (const auto& jf : jn.at("factors")) {
        CostFactor f;
        f.id = jf.at("id").get<std::string>();
        f.kind = parse_enum(kKinds, jf.at("kind"), "factor kind");
        f.origin = parse_enum(kOrigins, jf.at("origin"), "factor origin");
        f.unit = jf.at("unit").get<std::string>();
        f.scale = Rational::parse(jf.at("scale").get<std::string>());
        f.keys = jf.at("keys").get<std::vector<std::string>>();
        if (jf.contains("price_key")) f.price_key = jf["price_key"].get<std::string>();
        n.factors.push_back(std::move(f));
      }
      n.rate_key = jn.at("rate_key").get<std::string>();
      g.nodes.push_back(std::move(n));
    }
    for (const auto& je : doc.at("edges")) {
      FlowEdge e;
      e.from = je.at("from").get<std::string>();
      e.to = je.at("to").get<std::string>();
      e.kind = parse_enum(kEdges, je.at("kind"), "edge kind");
      e.weight = Rational::parse(je.at("weight").get<std::string>());
      for (const auto& jt : je.at("weight_terms"))
        e.terms.push_back({jt.at("key").get<std::string>(), jt.at("complement").get<bool>()});
      e.justification = je.at("justification").get<std::string>();
      g.edges.push_back(std::move(e));
    }
    for (const auto& jd : doc.at("diamonds")) {
      g.diamonds.push_back({jd.at("node").get<std::string>(), jd.at("dominant").get<std::vector<std::size_t>>(),
                            jd.at("secondary").get<std::vector<std::size_t>>()});
    }
    for (const auto& js : doc.at("assumptions")) {
      AssumptionSlot s;
      s.key = js.at("key").get<std::string>();
      s.role = parse_enum(kRoles, js.at("role"), "assumption role");
      s.origin = parse_enum(kOrigins, js.at("origin"), "assumption origin");
      s.node = js.at("node").get<std::string>();
      s.anchor = span_from(js.at("anchor"));
      s.annotation_key = js.at("annotation_key").get<std::string>();
      if (js.contains("annotation")) s.annotation = Rational::parse(js["annotation"].get<std::string>());
      if (js.contains("constant")) s.constant = Rational::parse(js["constant"].get<std::string>());
      if (js.contains("default")) s.fallback = Rational::parse(js["default"].get<std::string>());
      g.slots.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed graph document: ") + e.what());
  }
  g.reindex();
  return g;
}

std::string graph_to_dot(const CostGraph& graph) {
  std::ostringstream os;
  os << "digraph cost_model {\n";
  os << "  rankdir=TB;\n";
  os << "  node [fontname=\"Helvetica\", fontsize=11];\n";
  os << "  edge [fontname=\"Helvetica\", fontsize=9];\n";
  for (const auto& n : graph.nodes) {
    os << "  \"" << dot_escape(n.id) << "\" [label=\"" << dot_escape(n.label) << "\"";
    if (n.node_class == NodeClass::Diamond) {
      os << ", shape=diamond, label=\"\", width=0.3, height=0.3";
    } else {
      os << ", shape=box, style=rounded";
    }
    os << "];\n";
    for (std::size_t i = 0; i < n.factors.size(); ++i) {
      const CostFactor& f = n.factors[i];
      std::string fid = n.id + "#" + std::to_string(i);
      const char* shape = f.kind == FactorKind::Accumulating ? "square"
                          : f.kind == FactorKind::Fixed      ? "hexagon"
                                                             : "circle";
      os << "  \"" << dot_escape(fid) << "\" [label=\"\", xlabel=\"" << dot_escape(f.unit)
         << "\", shape=" << shape << ", width=0.15, height=0.15, fixedsize=true];\n";
      os << "  \"" << dot_escape(n.id) << "\" -> \"" << dot_escape(fid)
         << "\" [arrowhead=none, style=dotted];\n";
    }
  }
  for (const auto& e : graph.edges) {
    os << "  \"" << dot_escape(e.from) << "\" -> \"" << dot_escape(e.to) << "\" [";
    switch (e.kind) {
      case EdgeKind::Sync: os << "style=solid, arrowhead=normal"; break;
      case EdgeKind::Deferred: os << "style=dashed, arrowhead=normal"; break;
      case EdgeKind::ImplicitDominant: os << "style=solid, arrowhead=normal, penwidth=2"; break;
      case EdgeKind::ImplicitSecondary: os << "style=solid, arrowhead=onormal"; break;
    }
    if (e.weight != Rational(1)) os << ", label=\"x" << e.weight.str() << "\"";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace penny
