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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "penny/cost_graph.hpp"
#include "penny/pricing.hpp"
#include "penny/rational.hpp"

namespace penny {

// One month is 30 days.
inline constexpr std::int64_t kSecondsPerMonth = 2'592'000;

struct AssumptionSet {
  std::map<std::string, Rational> overrides;
};

// {"key": number | "decimal" | "p/q", ...}
AssumptionSet assumptions_from_json(std::string_view text);
std::string assumptions_to_json(const AssumptionSet& assumptions);

struct ResolvedValue {
  std::optional<Rational> value;
  std::string source;  // override | annotation | constant | default | ""
};

class Resolution {
 public:
  std::map<std::string, ResolvedValue> values;

  // Throws UnresolvedAssumption when `key` has no value.
  const Rational& at(const std::string& key) const;
  // Keys without a value, sorted.
  std::vector<std::string> unresolved() const;
};

// Resolves every slot as override > annotation > constant > default and
// checks value ranges (InvalidAssumption). Overrides for unknown keys are
// ignored; see unknown_keys.
Resolution resolve(const CostGraph& graph, const AssumptionSet& assumptions);
std::vector<std::string> unknown_keys(const CostGraph& graph, const AssumptionSet& assumptions);
std::vector<CatalogueEntry> factor_catalogue(const CostGraph& graph, const AssumptionSet& assumptions);
// [{id, role, kind, origin, node, source, value, resolved}]
std::string catalogue_to_json(const std::vector<CatalogueEntry>& catalogue, int indent = 2);

// Count of traversals per month, indexed like graph.nodes.
std::vector<Rational> monthly_counts(const CostGraph& graph, const Resolution& values);
std::map<std::string, Rational> monthly_counts_by_id(const CostGraph& graph, const Resolution& values);

// Stored units per accumulating factor id at the end of `month`.
std::map<std::string, Rational> stock_at(const CostGraph& graph, const Resolution& values, int month);

struct FactorLine {
  std::string id;
  FactorKind kind = FactorKind::Invocation;
  std::string unit;
  std::string scheme;  // per_unit | tiered | fixed_monthly | self_priced
  Rational quantity;
  MicroUsd amount = 0;
};

struct NodeLine {
  std::string id;
  std::string label;
  std::string node_class;
  Rational count;
  std::vector<FactorLine> factors;
  MicroUsd subtotal = 0;
};

struct CostReport {
  std::string vendor;
  std::string catalog_version;
  int month = 1;
  std::string mode = "analytic";  // analytic | simulated
  std::vector<NodeLine> nodes;
  MicroUsd total = 0;
  std::vector<std::string> unresolved;

  const NodeLine* node(const std::string& id) const;
  const FactorLine* factor(const std::string& id) const;
};

std::string report_to_json(const CostReport& report);
CostReport report_from_json(std::string_view text);

CostReport monthly_cost(const BoundModel& model, const AssumptionSet& assumptions, int month);
// Prices externally supplied counts exactly as monthly_cost prices analytic ones.
CostReport price_counts(const BoundModel& model, const Resolution& values, const std::vector<Rational>& counts,
                        int month, const std::string& mode);

struct InvocationCost {
  std::string entry;
  Rational micro_usd;  // exact, per single invocation
  bool marginal = false;  // a tiered rule contributed its marginal rate
  std::vector<std::pair<std::string, Rational>> per_node;
};

InvocationCost invocation_cost(const BoundModel& model, const AssumptionSet& assumptions,
                               const std::string& entry);

struct Comparison {
  std::vector<CostReport> reports;
  // deltas[i][node id] = reports[i] subtotal - reports[0] subtotal
  std::vector<std::map<std::string, MicroUsd>> deltas;
};

Comparison compare_catalogs(const CostGraph& graph, const AssumptionSet& assumptions,
                            const std::vector<std::shared_ptr<const Catalog>>& catalogs, int month);
std::string comparison_to_json(const Comparison& comparison);

// Event-driven oracle. Measures month `month` after one warm-up month so that
// queue backlogs carried across month boundaries are in steady state.
CostReport simulate_month(const BoundModel& model, const AssumptionSet& assumptions, int month,
                          std::uint64_t seed);
std::vector<Rational> simulate_counts(const CostGraph& graph, const Resolution& values, std::uint64_t seed);

}  // namespace penny
