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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "penny/cost_graph.hpp"
#include "penny/rational.hpp"

namespace penny {

enum class SchemeKind { PerUnit, Tiered, FixedMonthly };

std::string_view to_string(SchemeKind k);

// Rates are micro-USD per unit. `up_to` is the cumulative upper bound of the
// tier; the last tier is unbounded.
struct Tier {
  std::optional<Rational> up_to;
  Rational rate;
};

struct PriceRule {
  NodeClass node_class = NodeClass::Endpoint;
  std::string unit;
  SchemeKind kind = SchemeKind::PerUnit;
  Rational rate;            // per_unit and fixed_monthly
  std::vector<Tier> tiers;  // tiered
  Rational free_allowance = 0;
};

struct Catalog {
  std::string vendor_id;
  std::string version;
  std::vector<PriceRule> rules;

  const PriceRule* find(NodeClass node_class, std::string_view unit) const;
};

Catalog parse_catalog(std::string_view json);
Catalog load_catalog(const std::filesystem::path& path);
std::string catalog_to_json(const Catalog& catalog);
// Checks the rule invariants; throws InvalidRule or NonIncreasingTiers.
void validate_rule(const PriceRule& rule);

// Exact price of `quantity` units in one month.
Rational evaluate_rule_exact(const PriceRule& rule, const Rational& quantity);
// evaluate_rule_exact rounded half-even to whole micro-USD.
MicroUsd evaluate_rule(const PriceRule& rule, const Rational& quantity);
// Price of the next unit after `quantity` units (0 for fixed_monthly).
Rational marginal_rate(const PriceRule& rule, const Rational& quantity);

// A graph bound to a catalog. `rules[n][f]` is the index of the rule pricing
// factor f of node n, or -1 for self-priced factors.
struct BoundModel {
  CostGraph graph;
  std::shared_ptr<const Catalog> catalog;
  std::vector<std::vector<int>> rules;

  const PriceRule* rule_for(std::size_t node, std::size_t factor) const;
};

// Throws UnpricedFactor listing every gap as "node-id:unit" in details.
BoundModel bind(const CostGraph& graph, std::shared_ptr<const Catalog> catalog);

}  // namespace penny
