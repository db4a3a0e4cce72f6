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
#include "penny/pricing.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "penny/error.hpp"

namespace penny {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kUnits[] = {unit::kRequest, unit::kReadRequest, unit::kWriteRequest, unit::kGbSecond,
                                       unit::kGb,      unit::kGbMonth,     unit::kCall,         unit::kMonth};

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorCode::CatalogParseError, message); }

void only_fields(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      bad("unknown field '" + k + "' in " + where);
  }
}

Rational rate_of(const json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number_float()) return Rational::from_double(j.get<double>());
    if (j.is_string()) {
      if (auto r = Rational::try_parse(j.get<std::string>())) return *r;
    }
  } catch (const Error& e) {
    bad(where + ": " + e.what());
  }
  bad(where + " must be a number or a decimal string");
}

std::string amount_text(const Rational& r) {
  auto d = r.decimal();
  return d ? *d : r.str();
}

std::string string_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string()) bad(where + "." + key + " must be a string");
  return j.at(key).get<std::string>();
}

PriceRule parse_rule(const json& j, std::size_t index) {
  std::string where = "rules[" + std::to_string(index) + "]";
  only_fields(j, {"applies_to", "scheme", "free_allowance"}, where);
  if (!j.contains("applies_to") || !j.contains("scheme")) bad(where + " needs applies_to and scheme");
  const json& to = j.at("applies_to");
  only_fields(to, {"node_class", "unit"}, where + ".applies_to");
  PriceRule r;
  std::string cls = string_field(to, "node_class", where + ".applies_to");
  auto nc = node_class_from_string(cls);
  if (!nc) throw Error(ErrorCode::InvalidRule, where + ": unknown node_class '" + cls + "'");
  r.node_class = *nc;
  r.unit = string_field(to, "unit", where + ".applies_to");

  const json& s = j.at("scheme");
  only_fields(s, {"kind", "rate", "tiers"}, where + ".scheme");
  std::string kind = string_field(s, "kind", where + ".scheme");
  if (kind == "per_unit" || kind == "fixed_monthly") {
    r.kind = kind == "per_unit" ? SchemeKind::PerUnit : SchemeKind::FixedMonthly;
    if (!s.contains("rate") || s.contains("tiers")) bad(where + ".scheme: " + kind + " takes exactly a rate");
    r.rate = rate_of(s.at("rate"), where + ".scheme.rate");
  } else if (kind == "tiered") {
    r.kind = SchemeKind::Tiered;
    if (!s.contains("tiers") || s.contains("rate") || !s.at("tiers").is_array())
      bad(where + ".scheme: tiered takes exactly a tiers array");
    std::size_t i = 0;
    for (const json& t : s.at("tiers")) {
      std::string tw = where + ".scheme.tiers[" + std::to_string(i++) + "]";
      only_fields(t, {"up_to", "rate"}, tw);
      if (!t.contains("up_to") || !t.contains("rate")) bad(tw + " needs up_to and rate");
      Tier tier;
      if (!t.at("up_to").is_null()) tier.up_to = rate_of(t.at("up_to"), tw + ".up_to");
      tier.rate = rate_of(t.at("rate"), tw + ".rate");
      r.tiers.push_back(tier);
    }
  } else {
    bad(where + ".scheme.kind must be per_unit, tiered or fixed_monthly");
  }
  if (j.contains("free_allowance")) r.free_allowance = rate_of(j.at("free_allowance"), where + ".free_allowance");
  try {
    validate_rule(r);
  } catch (Error& e) {
    throw Error(e.code(), where + ": " + e.what());
  }
  return r;
}

// Marginal pricing: each tier bills only the units between its bounds.
Rational tiered_price(const std::vector<Tier>& tiers, const Rational& quantity) {
  Rational total = 0;
  Rational lo = 0;
  for (const Tier& t : tiers) {
    if (quantity <= lo) break;
    Rational hi = t.up_to ? min(*t.up_to, quantity) : quantity;
    total += (hi - lo) * t.rate;
    if (!t.up_to) break;
    lo = *t.up_to;
  }
  return total;
}

}  // namespace

std::string_view to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::PerUnit: return "per_unit";
    case SchemeKind::Tiered: return "tiered";
    case SchemeKind::FixedMonthly: return "fixed_monthly";
  }
  return "per_unit";
}

const PriceRule* Catalog::find(NodeClass node_class, std::string_view u) const {
  for (const auto& r : rules)
    if (r.node_class == node_class && r.unit == u) return &r;
  return nullptr;
}

void validate_rule(const PriceRule& r) {
  if (std::find(std::begin(kUnits), std::end(kUnits), r.unit) == std::end(kUnits))
    throw Error(ErrorCode::InvalidRule, "unknown unit '" + r.unit + "'");
  if ((r.kind == SchemeKind::FixedMonthly) != (r.unit == unit::kMonth))
    throw Error(ErrorCode::InvalidRule, "unit 'month' is used by fixed_monthly rules only");
  if (r.free_allowance.is_negative()) throw Error(ErrorCode::InvalidRule, "free_allowance must be >= 0");
  if (r.kind != SchemeKind::Tiered) {
    if (r.rate.is_negative()) throw Error(ErrorCode::InvalidRule, "rate must be >= 0");
    return;
  }
  if (r.tiers.empty()) throw Error(ErrorCode::InvalidRule, "tiered scheme needs at least one tier");
  for (std::size_t i = 0; i < r.tiers.size(); ++i) {
    const Tier& t = r.tiers[i];
    if (t.rate.is_negative()) throw Error(ErrorCode::InvalidRule, "tier rate must be >= 0");
    bool last = i + 1 == r.tiers.size();
    if (last != !t.up_to.has_value())
      throw Error(ErrorCode::NonIncreasingTiers, "only the last tier is unbounded (up_to: null)");
    if (t.up_to && (*t.up_to <= (i ? *r.tiers[i - 1].up_to : Rational(0))))
      throw Error(ErrorCode::NonIncreasingTiers, "tier bounds must be positive and strictly increasing");
  }
}

Catalog parse_catalog(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  only_fields(j, {"vendor_id", "version", "rules"}, "catalog");
  Catalog c;
  c.vendor_id = string_field(j, "vendor_id", "catalog");
  c.version = string_field(j, "version", "catalog");
  if (!j.contains("rules") || !j.at("rules").is_array()) bad("catalog.rules must be an array");
  std::size_t i = 0;
  for (const json& r : j.at("rules")) {
    PriceRule rule = parse_rule(r, i);
    if (c.find(rule.node_class, rule.unit)) {
      throw Error(ErrorCode::DuplicateRule, "rules[" + std::to_string(i) + "]: second rule for (" +
                                                std::string(to_string(rule.node_class)) + ", " + rule.unit + ")");
    }
    c.rules.push_back(std::move(rule));
    ++i;
  }
  return c;
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read catalog " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_catalog(ss.str());
}

std::string catalog_to_json(const Catalog& c) {
  ordered_json j;
  j["vendor_id"] = c.vendor_id;
  j["version"] = c.version;
  j["rules"] = ordered_json::array();
  for (const auto& r : c.rules) {
    ordered_json rule;
    rule["applies_to"] = {{"node_class", to_string(r.node_class)}, {"unit", r.unit}};
    ordered_json scheme;
    scheme["kind"] = to_string(r.kind);
    if (r.kind == SchemeKind::Tiered) {
      scheme["tiers"] = ordered_json::array();
      for (const auto& t : r.tiers) {
        scheme["tiers"].push_back({{"up_to", t.up_to ? ordered_json(amount_text(*t.up_to)) : ordered_json(nullptr)},
                                   {"rate", amount_text(t.rate)}});
      }
    } else {
      scheme["rate"] = amount_text(r.rate);
    }
    rule["scheme"] = std::move(scheme);
    rule["free_allowance"] = amount_text(r.free_allowance);
    j["rules"].push_back(std::move(rule));
  }
  return j.dump(2) + "\n";
}

Rational evaluate_rule_exact(const PriceRule& rule, const Rational& quantity) {
  if (quantity.is_negative()) throw Error(ErrorCode::NegativeQuantity, "quantity " + quantity.str() + " is negative");
  if (rule.kind == SchemeKind::FixedMonthly) return rule.rate;
  Rational billable = max(Rational(0), quantity - rule.free_allowance);
  if (rule.kind == SchemeKind::PerUnit) return billable * rule.rate;
  return tiered_price(rule.tiers, billable);
}

MicroUsd evaluate_rule(const PriceRule& rule, const Rational& quantity) {
  return evaluate_rule_exact(rule, quantity).round_half_even();
}

Rational marginal_rate(const PriceRule& rule, const Rational& quantity) {
  if (quantity.is_negative()) throw Error(ErrorCode::NegativeQuantity, "quantity " + quantity.str() + " is negative");
  if (rule.kind == SchemeKind::FixedMonthly) return 0;
  if (quantity < rule.free_allowance) return 0;
  if (rule.kind == SchemeKind::PerUnit) return rule.rate;
  Rational billable = quantity - rule.free_allowance;
  for (const Tier& t : rule.tiers)
    if (!t.up_to || billable < *t.up_to) return t.rate;
  return rule.tiers.back().rate;
}

const PriceRule* BoundModel::rule_for(std::size_t node, std::size_t factor) const {
  int idx = rules.at(node).at(factor);
  return idx < 0 ? nullptr : &catalog->rules.at(static_cast<std::size_t>(idx));
}

BoundModel bind(const CostGraph& graph, std::shared_ptr<const Catalog> catalog) {
  BoundModel m;
  m.graph = graph;
  m.catalog = std::move(catalog);
  std::vector<std::string> gaps;
  for (auto& n : m.graph.nodes) {
    // Subscription charges attach to every node of the class.
    if (m.catalog->find(n.node_class, unit::kMonth)) {
      bool present = std::any_of(n.factors.begin(), n.factors.end(),
                                 [](const CostFactor& f) { return f.kind == FactorKind::Fixed; });
      if (!present) {
        CostFactor f;
        f.id = n.key + ".month";
        f.kind = FactorKind::Fixed;
        f.origin = FactorOrigin::External;
        f.unit = std::string(unit::kMonth);
        n.factors.push_back(std::move(f));
      }
    }
    std::vector<int> row;
    for (const auto& f : n.factors) {
      if (!f.price_key.empty()) {
        row.push_back(-1);
        continue;
      }
      const PriceRule* r = m.catalog->find(n.node_class, f.unit);
      if (!r) {
        gaps.push_back(n.id + ":" + f.unit);
        row.push_back(-1);
        continue;
      }
      row.push_back(static_cast<int>(r - m.catalog->rules.data()));
    }
    m.rules.push_back(std::move(row));
  }
  if (!gaps.empty()) {
    std::string msg = "no price rule for";
    for (const auto& g : gaps) msg += " " + g;
    throw Error(ErrorCode::UnpricedFactor, msg).with_details(gaps);
  }
  m.graph.reindex();
  return m;
}

}  // namespace penny
