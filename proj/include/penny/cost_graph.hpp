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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "penny/rational.hpp"
#include "penny/span.hpp"

namespace penny {

enum class NodeClass {
  Endpoint,
  Function,
  BucketOp,
  QueueOp,
  TableOp,
  ScheduleTick,
  ExternalHttpCall,
  Diamond,
};

std::string_view to_string(NodeClass c);
std::optional<NodeClass> node_class_from_string(std::string_view s);

enum class FactorKind { Invocation, Fixed, Accumulating };
enum class FactorOrigin { External, Internal };
enum class EdgeKind { Sync, Deferred, ImplicitDominant, ImplicitSecondary };

std::string_view to_string(FactorKind k);
std::string_view to_string(FactorOrigin o);
std::string_view to_string(EdgeKind k);

// Units used by factors and price rules.
namespace unit {
inline constexpr std::string_view kRequest = "request";
inline constexpr std::string_view kReadRequest = "read-request";
inline constexpr std::string_view kWriteRequest = "write-request";
inline constexpr std::string_view kGbSecond = "GB-second";
inline constexpr std::string_view kGb = "GB";
inline constexpr std::string_view kGbMonth = "GB-month";
inline constexpr std::string_view kCall = "call";
inline constexpr std::string_view kMonth = "month";
}  // namespace unit

// One billed aspect of a node. The per-invocation quantity (per month for
// fixed factors, per invocation of inflow for accumulating ones) is
// `scale` times the product of the assumption values named in `keys`.
struct CostFactor {
  std::string id;
  FactorKind kind = FactorKind::Invocation;
  FactorOrigin origin = FactorOrigin::Internal;
  std::string unit;
  Rational scale = 1;
  std::vector<std::string> keys;
  // Self-priced factors (external unit prices) carry the USD price key.
  std::string price_key;
};

struct CostNode {
  std::string id;
  std::string label;
  NodeClass node_class = NodeClass::Endpoint;
  Span span;
  // Dotted prefix used for this node's assumption keys, e.g. "upload.fn".
  std::string key;
  std::vector<CostFactor> factors;
  // Entry nodes: the assumption giving the monthly rate (for ScheduleTick,
  // the tick period in seconds).
  std::string rate_key;
};

struct WeightTerm {
  std::string key;
  bool complement = false;  // contributes 1 - value
};

struct FlowEdge {
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::Sync;
  std::vector<WeightTerm> terms;
  // Weight under annotations and defaults only.
  Rational weight = 1;
  std::string justification;
};

struct DiamondInfo {
  std::string node;
  std::vector<std::size_t> dominant;   // edge indices
  std::vector<std::size_t> secondary;  // edge indices
};

enum class AssumptionRole {
  EntryRate,
  MemoryGb,
  DurationSeconds,
  PayloadBytes,
  RecordBytes,
  ResponseBytes,
  PricePerCall,
  ScheduleRate,
  Multiplicity,
  Probability,
  ConsumerShare,
};

std::string_view to_string(AssumptionRole r);

// A named input to the model. Values resolve as override > annotation >
// constant found in code > default.
struct AssumptionSlot {
  std::string key;
  AssumptionRole role = AssumptionRole::EntryRate;
  FactorOrigin origin = FactorOrigin::External;
  std::string node;            // node the slot belongs to
  Span anchor;                 // expression the annotation is written on
  std::string annotation_key;  // local key inside the wrapper object
  std::optional<Rational> annotation;
  std::optional<Rational> constant;
  std::optional<Rational> fallback;
};

struct Finding {
  std::string code;  // MissingFactor, DanglingEdge, MalformedDiamond, DuplicateNode
  std::string subject;
  std::string message;
};

class CostGraph {
 public:
  std::vector<CostNode> nodes;
  std::vector<FlowEdge> edges;
  std::vector<DiamondInfo> diamonds;
  std::vector<AssumptionSlot> slots;

  // Rebuilds the id lookup; call after mutating `nodes` or `slots`.
  void reindex();
  const CostNode* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  const AssumptionSlot* slot(std::string_view key) const;

  std::vector<std::size_t> in_edges(std::string_view id) const;
  std::vector<std::size_t> out_edges(std::string_view id) const;

 private:
  std::unordered_map<std::string, std::size_t> node_index_;
  std::unordered_map<std::string, std::size_t> slot_index_;
};

// Nodes with no incoming edges, in node order.
std::vector<const CostNode*> entry_points(const CostGraph& graph);

std::vector<Finding> validate(const CostGraph& graph);

struct CatalogueEntry {
  std::string id;
  std::string role;
  FactorKind kind = FactorKind::Invocation;
  FactorOrigin origin = FactorOrigin::External;
  std::string node;
  std::string value_source;  // override | annotation | constant | default | "" when unresolved
  std::optional<Rational> value;
  bool resolved = false;
};

// Weight of `edge` after applying `value` to each of its terms.
template <typename Lookup>
Rational edge_weight(const FlowEdge& edge, Lookup&& value) {
  Rational w = 1;
  for (const auto& t : edge.terms) {
    Rational v = value(t.key);
    w *= t.complement ? Rational(1) - v : v;
  }
  return w;
}

std::string graph_to_json(const CostGraph& graph, int indent = 2);
CostGraph graph_from_json(std::string_view text);
std::string graph_to_dot(const CostGraph& graph);

}  // namespace penny
