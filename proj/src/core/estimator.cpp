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
#include "penny/estimator.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "penny/error.hpp"

namespace penny {
namespace {

using nlohmann::ordered_json;

const Rational kMicroPerUsd = 1'000'000;

std::string exact_text(const Rational& r) {
  auto d = r.decimal();
  return d ? *d : r.str();
}

void check_range(const AssumptionSlot& slot, const Rational& v) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::InvalidAssumption, slot.key + " = " + exact_text(v) + ": " + what)
        .with_details({slot.key});
  };
  switch (slot.role) {
    case AssumptionRole::Probability:
    case AssumptionRole::ConsumerShare:
      if (v.is_negative() || v > Rational(1)) fail("must lie in [0, 1]");
      break;
    case AssumptionRole::ScheduleRate:
      if (v <= Rational(0)) fail("must be > 0 seconds");
      break;
    default:
      if (v.is_negative()) fail("must be >= 0");
  }
}

std::string kind_for_slot(const CostGraph& g, const AssumptionSlot& s, FactorKind* kind) {
  for (const auto& n : g.nodes) {
    for (const auto& f : n.factors) {
      if (std::find(f.keys.begin(), f.keys.end(), s.key) != f.keys.end() || f.price_key == s.key) {
        *kind = f.kind;
        return f.id;
      }
    }
  }
  *kind = FactorKind::Invocation;
  return {};
}

// Kahn order over every edge kind; throws CycleDetected.
std::vector<std::size_t> topo_order(const CostGraph& g) {
  std::vector<std::size_t> indeg(g.nodes.size(), 0);
  std::vector<std::vector<std::size_t>> out(g.nodes.size());
  for (const auto& e : g.edges) {
    auto from = g.index_of(e.from);
    auto to = g.index_of(e.to);
    if (!from || !to) throw Error(ErrorCode::Internal, "edge " + e.from + " -> " + e.to + " has a missing endpoint");
    out[*from].push_back(*to);
    ++indeg[*to];
  }
  std::vector<std::size_t> order;
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < indeg.size(); ++i)
    if (indeg[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    std::size_t n = ready.front();
    ready.pop_front();
    order.push_back(n);
    for (std::size_t t : out[n])
      if (--indeg[t] == 0) ready.push_back(t);
  }
  if (order.size() != g.nodes.size()) {
    std::vector<std::string> cyclic;
    for (std::size_t i = 0; i < indeg.size(); ++i)
      if (indeg[i] > 0) cyclic.push_back(g.nodes[i].id);
    std::string msg = "control flow contains a cycle through";
    for (const auto& c : cyclic) msg += " " + c;
    throw Error(ErrorCode::CycleDetected, msg).with_details(cyclic);
  }
  return order;
}

std::string rate_key_of(const CostNode& n) {
  return n.rate_key.empty() ? n.key + ".invocationsPerMonth" : n.rate_key;
}

Rational per_invocation(const CostFactor& f, const Resolution& values) {
  Rational q = f.scale;
  for (const auto& k : f.keys) q *= values.at(k);
  return q;
}

Rational weight_of(const FlowEdge& e, const Resolution& values) {
  return edge_weight(e, [&](const std::string& k) { return values.at(k); });
}

Resolution resolve_complete(const CostGraph& graph, const AssumptionSet& assumptions) {
  Resolution values = resolve(graph, assumptions);
  auto missing = values.unresolved();
  if (!missing.empty()) {
    std::string msg = "unresolved assumptions:";
    for (const auto& k : missing) msg += " " + k;
    throw Error(ErrorCode::UnresolvedAssumption, msg).with_details(missing);
  }
  return values;
}

void check_month(int month) {
  if (month < 1) throw Error(ErrorCode::InvalidArgument, "month must be >= 1, got " + std::to_string(month));
}

std::optional<FactorKind> factor_kind_from(std::string_view s) {
  for (auto k : {FactorKind::Invocation, FactorKind::Fixed, FactorKind::Accumulating})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

}  // namespace

AssumptionSet assumptions_from_json(std::string_view text) {
  AssumptionSet set;
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("invalid assumptions JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "assumptions must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    std::optional<Rational> r;
    if (v.is_number_integer()) r = Rational(v.get<std::int64_t>());
    else if (v.is_number_float()) r = Rational::from_double(v.get<double>());
    else if (v.is_string()) r = Rational::try_parse(v.get<std::string>());
    if (!r) throw Error(ErrorCode::InvalidArgument, "assumption " + k + " must be a number").with_details({k});
    set.overrides[k] = *r;
  }
  return set;
}

std::string assumptions_to_json(const AssumptionSet& set) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : set.overrides) j[k] = exact_text(v);
  return j.dump(2) + "\n";
}

const Rational& Resolution::at(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end() || !it->second.value) {
    throw Error(ErrorCode::UnresolvedAssumption, "unresolved assumption " + key).with_details({key});
  }
  return *it->second.value;
}

std::vector<std::string> Resolution::unresolved() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values)
    if (!v.value) out.push_back(k);
  return out;
}

Resolution resolve(const CostGraph& graph, const AssumptionSet& assumptions) {
  Resolution r;
  for (const auto& s : graph.slots) {
    ResolvedValue v;
    if (auto it = assumptions.overrides.find(s.key); it != assumptions.overrides.end()) {
      v = {it->second, "override"};
    } else if (s.annotation) {
      v = {*s.annotation, "annotation"};
    } else if (s.constant) {
      v = {*s.constant, "constant"};
    } else if (s.fallback) {
      v = {*s.fallback, "default"};
    }
    if (v.value) check_range(s, *v.value);
    r.values[s.key] = std::move(v);
  }
  return r;
}

std::vector<std::string> unknown_keys(const CostGraph& graph, const AssumptionSet& assumptions) {
  std::vector<std::string> out;
  for (const auto& [k, v] : assumptions.overrides)
    if (!graph.slot(k)) out.push_back(k);
  return out;
}

std::vector<CatalogueEntry> factor_catalogue(const CostGraph& graph, const AssumptionSet& assumptions) {
  Resolution r = resolve(graph, assumptions);
  std::vector<CatalogueEntry> out;
  for (const auto& s : graph.slots) {
    CatalogueEntry e;
    e.id = s.key;
    e.role = std::string(to_string(s.role));
    (void)kind_for_slot(graph, s, &e.kind);
    e.origin = s.origin;
    e.node = s.node;
    const ResolvedValue& v = r.values.at(s.key);
    e.value_source = v.source;
    e.value = v.value;
    e.resolved = v.value.has_value();
    out.push_back(std::move(e));
  }
  return out;
}

std::string catalogue_to_json(const std::vector<CatalogueEntry>& catalogue, int indent) {
  ordered_json j = ordered_json::array();
  for (const auto& e : catalogue) {
    j.push_back({{"id", e.id},
                 {"role", e.role},
                 {"kind", to_string(e.kind)},
                 {"origin", to_string(e.origin)},
                 {"node", e.node},
                 {"source", e.value_source},
                 {"value", e.value ? ordered_json(exact_text(*e.value)) : ordered_json(nullptr)},
                 {"resolved", e.resolved}});
  }
  return j.dump(indent) + (indent >= 0 ? "\n" : "");
}

std::vector<Rational> monthly_counts(const CostGraph& graph, const Resolution& values) {
  std::vector<std::size_t> order = topo_order(graph);
  std::vector<Rational> counts(graph.nodes.size());
  for (std::size_t i : order) {
    const CostNode& n = graph.nodes[i];
    auto in = graph.in_edges(n.id);
    if (in.empty()) {
      if (n.node_class == NodeClass::ScheduleTick)
        counts[i] = Rational(kSecondsPerMonth) / values.at(rate_key_of(n));
      else
        counts[i] = values.at(rate_key_of(n));
      continue;
    }
    Rational plain = 0, dominant = 0, secondary = 0;
    bool has_dominant = false, has_secondary = false;
    for (std::size_t ei : in) {
      const FlowEdge& e = graph.edges[ei];
      Rational flow = counts[*graph.index_of(e.from)] * weight_of(e, values);
      if (n.node_class == NodeClass::Diamond && e.kind == EdgeKind::ImplicitDominant) {
        dominant += flow;
        has_dominant = true;
      } else if (n.node_class == NodeClass::Diamond && e.kind == EdgeKind::ImplicitSecondary) {
        secondary += flow;
        has_secondary = true;
      } else {
        plain += flow;
      }
    }
    if (n.node_class == NodeClass::Diamond && has_secondary)
      counts[i] = plain + (has_dominant ? min(dominant, secondary) : Rational(0));
    else
      counts[i] = plain + dominant + secondary;
  }
  return counts;
}

std::map<std::string, Rational> monthly_counts_by_id(const CostGraph& graph, const Resolution& values) {
  auto counts = monthly_counts(graph, values);
  std::map<std::string, Rational> out;
  for (std::size_t i = 0; i < counts.size(); ++i) out[graph.nodes[i].id] = counts[i];
  return out;
}

std::map<std::string, Rational> stock_at(const CostGraph& graph, const Resolution& values, int month) {
  check_month(month);
  auto counts = monthly_counts(graph, values);
  std::map<std::string, Rational> out;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i)
    for (const auto& f : graph.nodes[i].factors)
      if (f.kind == FactorKind::Accumulating) out[f.id] = Rational(month) * counts[i] * per_invocation(f, values);
  return out;
}

const NodeLine* CostReport::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const FactorLine* CostReport::factor(const std::string& id) const {
  for (const auto& n : nodes)
    for (const auto& f : n.factors)
      if (f.id == id) return &f;
  return nullptr;
}

CostReport price_counts(const BoundModel& model, const Resolution& values, const std::vector<Rational>& counts,
                        int month, const std::string& mode) {
  check_month(month);
  const CostGraph& g = model.graph;
  CostReport report;
  report.vendor = model.catalog->vendor_id;
  report.catalog_version = model.catalog->version;
  report.month = month;
  report.mode = mode;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const CostNode& n = g.nodes[i];
    NodeLine line;
    line.id = n.id;
    line.label = n.label;
    line.node_class = std::string(to_string(n.node_class));
    line.count = counts.at(i);
    for (std::size_t fi = 0; fi < n.factors.size(); ++fi) {
      const CostFactor& f = n.factors[fi];
      FactorLine fl;
      fl.id = f.id;
      fl.kind = f.kind;
      fl.unit = f.unit;
      Rational per = per_invocation(f, values);
      switch (f.kind) {
        case FactorKind::Invocation: fl.quantity = line.count * per; break;
        case FactorKind::Accumulating: fl.quantity = Rational(month) * line.count * per; break;
        case FactorKind::Fixed: fl.quantity = per; break;
      }
      if (!f.price_key.empty()) {
        fl.scheme = "self_priced";
        fl.amount = (fl.quantity * values.at(f.price_key) * kMicroPerUsd).round_half_even();
      } else {
        const PriceRule* rule = model.rule_for(i, fi);
        if (!rule) throw Error(ErrorCode::UnpricedFactor, "no price rule for " + f.id).with_details({n.id + ":" + f.unit});
        fl.scheme = std::string(to_string(rule->kind));
        fl.amount = evaluate_rule(*rule, fl.quantity);
      }
      line.subtotal += fl.amount;
      line.factors.push_back(std::move(fl));
    }
    report.total += line.subtotal;
    report.nodes.push_back(std::move(line));
  }
  return report;
}

CostReport monthly_cost(const BoundModel& model, const AssumptionSet& assumptions, int month) {
  check_month(month);
  Resolution values = resolve_complete(model.graph, assumptions);
  return price_counts(model, values, monthly_counts(model.graph, values), month, "analytic");
}

std::string report_to_json(const CostReport& r) {
  ordered_json j;
  j["schema"] = "penny.report/1";
  j["currency"] = "USD_micro";
  j["vendor"] = r.vendor;
  j["catalog_version"] = r.catalog_version;
  j["month"] = r.month;
  j["mode"] = r.mode;
  j["nodes"] = ordered_json::array();
  for (const auto& n : r.nodes) {
    ordered_json jn;
    jn["id"] = n.id;
    jn["label"] = n.label;
    jn["class"] = n.node_class;
    jn["count"] = exact_text(n.count);
    jn["factors"] = ordered_json::array();
    for (const auto& f : n.factors) {
      jn["factors"].push_back({{"id", f.id},
                               {"kind", to_string(f.kind)},
                               {"unit", f.unit},
                               {"scheme", f.scheme},
                               {"quantity", exact_text(f.quantity)},
                               {"amount_micro", f.amount},
                               {"display", format_usd(f.amount)}});
    }
    jn["subtotal_micro"] = n.subtotal;
    jn["subtotal_display"] = format_usd(n.subtotal);
    j["nodes"].push_back(std::move(jn));
  }
  j["total_micro"] = r.total;
  j["total_display"] = format_usd(r.total);
  j["unresolved"] = r.unresolved;
  return j.dump(2) + "\n";
}

CostReport report_from_json(std::string_view text) {
  try {
    auto j = ordered_json::parse(text);
    if (j.at("schema") != "penny.report/1") throw Error(ErrorCode::InvalidArgument, "not a penny.report/1 document");
    CostReport r;
    r.vendor = j.at("vendor").get<std::string>();
    r.catalog_version = j.at("catalog_version").get<std::string>();
    r.month = j.at("month").get<int>();
    r.mode = j.at("mode").get<std::string>();
    for (const auto& jn : j.at("nodes")) {
      NodeLine n;
      n.id = jn.at("id").get<std::string>();
      n.label = jn.at("label").get<std::string>();
      n.node_class = jn.at("class").get<std::string>();
      n.count = Rational::parse(jn.at("count").get<std::string>());
      for (const auto& jf : jn.at("factors")) {
        FactorLine f;
        f.id = jf.at("id").get<std::string>();
        auto kind = factor_kind_from(jf.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown factor kind in report");
        f.kind = *kind;
        f.unit = jf.at("unit").get<std::string>();
        f.scheme = jf.at("scheme").get<std::string>();
        f.quantity = Rational::parse(jf.at("quantity").get<std::string>());
        f.amount = jf.at("amount_micro").get<MicroUsd>();
        n.factors.push_back(std::move(f));
      }
      n.subtotal = jn.at("subtotal_micro").get<MicroUsd>();
      r.nodes.push_back(std::move(n));
    }
    r.total = j.at("total_micro").get<MicroUsd>();
    r.unresolved = j.at("unresolved").get<std::vector<std::string>>();
    return r;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed report: ") + e.what());
  }
}

InvocationCost invocation_cost(const BoundModel& model, const AssumptionSet& assumptions, const std::string& entry) {
  const CostGraph& g = model.graph;
  auto entry_index = g.index_of(entry);
  if (!entry_index) throw Error(ErrorCode::NotFound, "no node " + entry);
  if (!g.in_edges(entry).empty()) throw Error(ErrorCode::NotAnEntryPoint, entry + " has incoming edges");
  Resolution values = resolve_complete(g, assumptions);
  std::vector<Rational> counts = monthly_counts(g, values);

  std::vector<Rational> mult(g.nodes.size());
  mult[*entry_index] = 1;
  for (std::size_t i : topo_order(g)) {
    if (mult[i].is_zero()) continue;
    for (std::size_t ei : g.out_edges(g.nodes[i].id)) {
      const FlowEdge& e = g.edges[ei];
      if (e.kind == EdgeKind::ImplicitSecondary) continue;
      mult[*g.index_of(e.to)] += mult[i] * weight_of(e, values);
    }
  }

  InvocationCost out;
  out.entry = entry;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (mult[i].is_zero()) continue;
    Rational node_cost = 0;
    const CostNode& n = g.nodes[i];
    for (std::size_t fi = 0; fi < n.factors.size(); ++fi) {
      const CostFactor& f = n.factors[fi];
      if (f.kind != FactorKind::Invocation) continue;
      Rational per = per_invocation(f, values);
      Rational rate;
      if (!f.price_key.empty()) {
        rate = values.at(f.price_key) * kMicroPerUsd;
      } else {
        const PriceRule* rule = model.rule_for(i, fi);
        if (!rule) throw Error(ErrorCode::UnpricedFactor, "no price rule for " + f.id);
        rate = marginal_rate(*rule, counts[i] * per);
        if (rule->kind == SchemeKind::Tiered) out.marginal = true;
      }
      node_cost += mult[i] * per * rate;
    }
    out.micro_usd += node_cost;
    out.per_node.emplace_back(n.id, node_cost);
  }
  return out;
}

Comparison compare_catalogs(const CostGraph& graph, const AssumptionSet& assumptions,
                            const std::vector<std::shared_ptr<const Catalog>>& catalogs, int month) {
  if (catalogs.empty()) throw Error(ErrorCode::InvalidArgument, "compare needs at least one catalog");
  Comparison c;
  for (const auto& cat : catalogs) {
    BoundModel m;
    try {
      m = penny::bind(graph, cat);
    } catch (const Error& e) {
      std::vector<std::string> details;
      for (const auto& d : e.details()) details.push_back(cat->vendor_id + ":" + d);
      throw Error(e.code(), "catalog " + cat->vendor_id + "/" + cat->version + ": " + e.what()).with_details(details);
    }
    c.reports.push_back(monthly_cost(m, assumptions, month));
  }
  const CostReport& base = c.reports.front();
  for (const auto& r : c.reports) {
    std::map<std::string, MicroUsd> d;
    for (const auto& n : r.nodes) {
      const NodeLine* b = base.node(n.id);
      d[n.id] = n.subtotal - (b ? b->subtotal : 0);
    }
    c.deltas.push_back(std::move(d));
  }
  return c;
}

std::string comparison_to_json(const Comparison& c) {
  ordered_json j;
  j["schema"] = "penny.comparison/1";
  j["month"] = c.reports.front().month;
  j["baseline"] = c.reports.front().vendor;
  j["vendors"] = ordered_json::array();
  for (std::size_t i = 0; i < c.reports.size(); ++i) {
    const CostReport& r = c.reports[i];
    ordered_json v;
    v["vendor"] = r.vendor;
    v["catalog_version"] = r.catalog_version;
    v["total_micro"] = r.total;
    v["total_display"] = format_usd(r.total);
    v["delta_micro"] = r.total - c.reports.front().total;
    v["nodes"] = ordered_json::array();
    for (const auto& n : r.nodes) {
      v["nodes"].push_back({{"id", n.id},
                            {"label", n.label},
                            {"subtotal_micro", n.subtotal},
                            {"delta_micro", c.deltas[i].at(n.id)}});
    }
    j["vendors"].push_back(std::move(v));
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct Stream {
  std::size_t node;
  std::int64_t events;
  Rational first;  // time of event 0
  Rational step;   // spacing
  std::uint64_t priority;
};

class Simulator {
 public:
  Simulator(const CostGraph& g, const Resolution& values) : g_(g), values_(values) {
    (void)topo_order(g);  // rejects cycles
    out_.resize(g.nodes.size());
    for (const auto& e : g.edges) {
      out_[*g.index_of(e.from)].push_back({*g.index_of(e.to), e.kind, weight_of(e, values)});
    }
    counts_.assign(g.nodes.size(), Rational(0));
    queues_.resize(g.nodes.size());
  }

  std::vector<Rational> run(std::uint64_t seed) {
    std::vector<Stream> streams;
    const Rational month(kSecondsPerMonth);
    for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
      const CostNode& n = g_.nodes[i];
      if (!g_.in_edges(n.id).empty()) continue;
      Stream s{i, 0, 0, 0, 0};
      if (n.node_class == NodeClass::ScheduleTick) {
        s.step = values_.at(rate_key_of(n));
        s.events = (month / s.step).ceil();
      } else {
        s.events = values_.at(rate_key_of(n)).round_half_even();
        if (s.events > 0) {
          s.step = month / Rational(s.events);
          s.first = s.step / Rational(2);
        }
      }
      streams.push_back(s);
    }
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> order(streams.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < streams.size(); ++i) streams[order[i]].priority = i;

    run_month(streams);  // warm-up
    std::fill(counts_.begin(), counts_.end(), Rational(0));
    run_month(streams);
    return counts_;
  }

 private:
  struct Out {
    std::size_t to;
    EdgeKind kind;
    Rational weight;
  };
  struct Queue {
    std::deque<Rational> items;
  };

  void run_month(const std::vector<Stream>& streams) {
    std::vector<std::int64_t> next(streams.size(), 0);
    for (;;) {
      std::size_t best = streams.size();
      Rational best_time;
      for (std::size_t s = 0; s < streams.size(); ++s) {
        if (next[s] >= streams[s].events) continue;
        Rational t = streams[s].first + streams[s].step * Rational(next[s]);
        if (best == streams.size() || t < best_time ||
            (t == best_time && streams[s].priority < streams[best].priority)) {
          best = s;
          best_time = t;
        }
      }
      if (best == streams.size()) return;
      ++next[best];
      fire(streams[best].node, 1);
    }
  }

  void fire(std::size_t node, const Rational& mass) {
    counts_[node] += mass;
    for (const Out& o : out_[node]) {
      Rational m = mass * o.weight;
      if (m.is_zero()) continue;
      bool diamond = g_.nodes[o.to].node_class == NodeClass::Diamond;
      if (diamond && o.kind == EdgeKind::ImplicitDominant) {
        queues_[o.to].items.push_back(m);
      } else if (diamond && o.kind == EdgeKind::ImplicitSecondary) {
        Rational taken = 0;
        auto& q = queues_[o.to].items;
        while (!q.empty() && taken < m) {
          Rational want = m - taken;
          if (q.front() <= want) {
            taken += q.front();
            q.pop_front();
          } else {
            q.front() -= want;
            taken = m;
          }
        }
        if (!taken.is_zero()) fire(o.to, taken);
      } else {
        fire(o.to, m);
      }
    }
  }

  const CostGraph& g_;
  const Resolution& values_;
  std::vector<std::vector<Out>> out_;
  std::vector<Rational> counts_;
  std::vector<Queue> queues_;
};

}  // namespace

std::vector<Rational> simulate_counts(const CostGraph& graph, const Resolution& values, std::uint64_t seed) {
  return Simulator(graph, values).run(seed);
}

CostReport simulate_month(const BoundModel& model, const AssumptionSet& assumptions, int month, std::uint64_t seed) {
  check_month(month);
  Resolution values = resolve_complete(model.graph, assumptions);
  return price_counts(model, values, simulate_counts(model.graph, values, seed), month, "simulated");
}

}  // namespace penny
