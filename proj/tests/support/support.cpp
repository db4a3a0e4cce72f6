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
#include "support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "penny/dsl.hpp"
#include "penny/error.hpp"
#include "penny/extractor.hpp"

#ifndef PENNY_SOURCE_DIR
#error "PENNY_SOURCE_DIR must point at the source tree"
#endif

namespace penny::testing {

namespace fs = std::filesystem;

fs::path source_dir() { return fs::path(PENNY_SOURCE_DIR); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SourceFile load_source(const fs::path& path) { return SourceFile{path.string(), read_file(path), 1}; }

CostGraph fixture_graph() {
  SourceFile src = load_source(source_dir() / "tests/fixtures/transcription.w");
  return extract(dsl::parse(src));
}

AssumptionSet fixture_assumptions() {
  return assumptions_from_json(read_file(source_dir() / "tests/fixtures/transcription.assumptions.json"));
}

std::shared_ptr<const Catalog> bundled_catalog(const std::string& id) {
  return std::make_shared<const Catalog>(load_catalog(source_dir() / "catalogs" / (id + ".json")));
}

void CheckResult::fail(const std::string& what) {
  if (failures++ == 0) first_failure = what;
}

void CheckResult::merge(const CheckResult& other) {
  cases += other.cases;
  if (other.failures > 0 && failures == 0) first_failure = other.first_failure;
  failures += other.failures;
}

// ---------------------------------------------------------------------------
// Random models

namespace {

using Rng = std::mt19937_64;

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[static_cast<std::size_t>(uniform(rng, 0, static_cast<std::int64_t>(xs.size()) - 1))];
}

bool chance(Rng& rng, int percent) { return uniform(rng, 0, 99) < percent; }

class ModelBuilder {
 public:
  explicit ModelBuilder(Rng& rng) : rng_(rng) {}

  void slot(const std::string& key, AssumptionRole role, const Rational& value, const std::string& node,
            FactorOrigin origin = FactorOrigin::External) {
    AssumptionSlot s;
    s.key = key;
    s.role = role;
    s.origin = origin;
    s.node = node;
    s.fallback = value;
    g.slots.push_back(std::move(s));
  }

  std::string node(NodeClass cls) {
    CostNode n;
    n.id = "n" + std::to_string(g.nodes.size());
    n.label = std::string(to_string(cls));
    n.node_class = cls;
    n.key = n.id;
    add_factors(n);
    g.nodes.push_back(std::move(n));
    return g.nodes.back().id;
  }

  std::size_t edge(const std::string& from, const std::string& to, EdgeKind kind, bool random_weight = true) {
    FlowEdge e;
    e.from = from;
    e.to = to;
    e.kind = kind;
    std::string key = "w" + std::to_string(g.edges.size());
    if (random_weight) {
      int r = static_cast<int>(uniform(rng_, 0, 99));
      if (r < 25) {
        e.terms.push_back({key + ".multiplicity", false});
        slot(key + ".multiplicity", AssumptionRole::Multiplicity, uniform(rng_, 1, 3), to, FactorOrigin::Internal);
      } else if (r < 40) {
        e.terms.push_back({key + ".probability", chance(rng_, 50)});
        slot(key + ".probability", AssumptionRole::Probability,
             pick(rng_, std::vector<Rational>{Rational(1, 2), Rational(1, 4), Rational(3, 4), Rational(1, 5)}), to,
             FactorOrigin::Internal);
      }
    }
    g.edges.push_back(std::move(e));
    return g.edges.size() - 1;
  }

  CostGraph g;

 private:
  void factor(CostNode& n, const std::string& unit, FactorKind kind, Rational scale, std::vector<std::string> keys) {
    CostFactor f;
    f.id = n.key + "." + unit;
    f.kind = kind;
    f.unit = unit;
    f.scale = scale;
    f.keys = std::move(keys);
    n.factors.push_back(std::move(f));
  }

  void add_factors(CostNode& n) {
    switch (n.node_class) {
      case NodeClass::Endpoint: factor(n, "request", FactorKind::Invocation, 1, {}); break;
      case NodeClass::Function: {
        std::string mem = n.key + ".memoryGb", dur = n.key + ".durationSeconds";
        slot(mem, AssumptionRole::MemoryGb,
             pick(rng_, std::vector<Rational>{Rational(1, 8), Rational(1, 4), Rational(1, 2), 1, 2}), n.id);
        slot(dur, AssumptionRole::DurationSeconds,
             pick(rng_, std::vector<Rational>{Rational(1, 10), Rational(1, 5), Rational(1, 2), 1, 3}), n.id);
        factor(n, "GB-second", FactorKind::Invocation, 1, {mem, dur});
        break;
      }
      case NodeClass::BucketOp:
      case NodeClass::TableOp: {
        if (chance(rng_, 60)) {
          std::string bytes = n.key + (n.node_class == NodeClass::BucketOp ? ".payloadBytes" : ".recordBytes");
          slot(bytes, n.node_class == NodeClass::BucketOp ? AssumptionRole::PayloadBytes : AssumptionRole::RecordBytes,
               uniform(rng_, 1, 100000) * 1000, n.id);
          n.label = n.node_class == NodeClass::BucketOp ? "Bucket.put" : "Table.insert";
          factor(n, "write-request", FactorKind::Invocation, 1, {});
          factor(n, "GB-month", FactorKind::Accumulating, Rational(1, 1000000000), {bytes});
        } else {
          n.label = n.node_class == NodeClass::BucketOp ? "Bucket.get" : "Table.list";
          factor(n, "read-request", FactorKind::Invocation, 1, {});
        }
        break;
      }
      case NodeClass::QueueOp: factor(n, "request", FactorKind::Invocation, 1, {}); break;
      case NodeClass::ExternalHttpCall: {
        std::string price = n.key + ".pricePerCall";
        slot(price, AssumptionRole::PricePerCall, Rational(uniform(rng_, 1, 20), 1000), n.id);
        factor(n, "call", FactorKind::Invocation, 1, {});
        n.factors.back().origin = FactorOrigin::External;
        n.factors.back().price_key = price;
        break;
      }
      case NodeClass::ScheduleTick:
      case NodeClass::Diamond: break;
    }
  }

  Rng& rng_;
};

PriceRule random_rule(Rng& rng, NodeClass cls, const std::string& unit, const RandomOptions& o) {
  PriceRule r;
  r.node_class = cls;
  r.unit = unit;
  Rational base = unit == "GB-month" ? Rational(uniform(rng, 1000, 300000)) : Rational(uniform(rng, 1, 2000), 100);
  if (o.tiered && chance(rng, 50)) {
    r.kind = SchemeKind::Tiered;
    std::int64_t bound = 0;
    int n = static_cast<int>(uniform(rng, 1, 3));
    for (int i = 0; i < n; ++i) {
      bound += uniform(rng, 1, 200000);
      r.tiers.push_back({Rational(bound), base * Rational(uniform(rng, 1, 20), 10)});
    }
    r.tiers.push_back({std::nullopt, base * Rational(uniform(rng, 1, 20), 10)});
  } else {
    r.kind = SchemeKind::PerUnit;
    r.rate = base;
  }
  if (o.tiered && chance(rng, 40)) r.free_allowance = uniform(rng, 0, 5000);
  return r;
}

std::shared_ptr<const Catalog> random_catalog(Rng& rng, const RandomOptions& o) {
  auto c = std::make_shared<Catalog>();
  c->vendor_id = "random";
  c->version = "v1";
  const std::vector<std::pair<NodeClass, std::string>> priced = {
      {NodeClass::Endpoint, "request"},       {NodeClass::Function, "GB-second"},
      {NodeClass::BucketOp, "write-request"}, {NodeClass::BucketOp, "read-request"},
      {NodeClass::BucketOp, "GB-month"},      {NodeClass::QueueOp, "request"},
      {NodeClass::TableOp, "write-request"},  {NodeClass::TableOp, "read-request"},
      {NodeClass::TableOp, "GB-month"},
  };
  for (const auto& [cls, unit] : priced) c->rules.push_back(random_rule(rng, cls, unit, o));
  if (o.fixed) {
    for (NodeClass cls : {NodeClass::Endpoint, NodeClass::Function, NodeClass::QueueOp, NodeClass::BucketOp,
                          NodeClass::TableOp, NodeClass::ExternalHttpCall}) {
      if (!chance(rng, 50)) continue;
      PriceRule r;
      r.node_class = cls;
      r.unit = "month";
      r.kind = SchemeKind::FixedMonthly;
      r.rate = Rational(uniform(rng, 0, 20000000), 10);
      c->rules.push_back(r);
    }
  }
  return c;
}

}  // namespace

RandomModel random_model(std::uint64_t seed, const RandomOptions& o) {
  Rng rng(seed);
  ModelBuilder b(rng);
  RandomModel m;
  const std::vector<NodeClass> general = {NodeClass::Function, NodeClass::BucketOp, NodeClass::TableOp,
                                          NodeClass::QueueOp, NodeClass::ExternalHttpCall};

  bool diamond = o.diamond && o.max_nodes >= 6 && chance(rng, 70);
  bool tick = diamond || (o.ticks && chance(rng, 50));
  int endpoints = static_cast<int>(uniform(rng, 1, 2));

  std::vector<std::string> upstream;
  for (int i = 0; i < endpoints; ++i) {
    std::string id = b.node(NodeClass::Endpoint);
    b.g.nodes.back().rate_key = id + ".requestsPerMonth";
    b.slot(id + ".requestsPerMonth", AssumptionRole::EntryRate, uniform(rng, 0, 20000), id);
    m.entry_keys.push_back(id + ".requestsPerMonth");
    upstream.push_back(id);
  }
  std::string tick_id;
  if (tick) {
    tick_id = b.node(NodeClass::ScheduleTick);
    b.g.nodes.back().rate_key = tick_id + ".rateSeconds";
    b.slot(tick_id + ".rateSeconds", AssumptionRole::ScheduleRate,
           pick(rng, std::vector<Rational>{60, 120, 180, 300, 600, 900, 3600}), tick_id);
    m.tick_keys.push_back(tick_id + ".rateSeconds");
    if (!diamond) upstream.push_back(tick_id);
  }

  int budget = o.max_nodes - static_cast<int>(b.g.nodes.size());
  int reserved = diamond ? 4 : 0;  // push, pop, diamond, one consumer
  int plain = static_cast<int>(uniform(rng, 1, std::max(1, budget - reserved)));
  plain = std::min(plain, budget - reserved);
  auto attach = [&](const std::string& id, std::vector<std::string>& parents) {
    b.edge(pick(rng, parents), id, chance(rng, 50) ? EdgeKind::Sync : EdgeKind::Deferred);
    if (parents.size() > 1 && chance(rng, 20)) {
      std::string other = pick(rng, parents);
      bool dup = false;
      for (const auto& e : b.g.edges) dup |= e.from == other && e.to == id;
      if (!dup) b.edge(other, id, EdgeKind::Sync);
    }
  };
  for (int i = 0; i < plain; ++i) {
    std::string id = b.node(pick(rng, general));
    attach(id, upstream);
    upstream.push_back(id);
  }

  if (diamond) {
    std::string push = b.node(NodeClass::QueueOp);
    attach(push, upstream);
    std::string pop = b.node(NodeClass::QueueOp);
    b.edge(tick_id, pop, EdgeKind::Deferred);
    std::string d = b.node(NodeClass::Diamond);
    DiamondInfo info;
    info.node = d;
    std::size_t de = b.edge(push, d, EdgeKind::ImplicitDominant, false);
    std::string share = push + ".consumerShare";
    b.g.edges[de].terms.push_back({share, false});
    b.slot(share, AssumptionRole::ConsumerShare,
           pick(rng, std::vector<Rational>{1, 1, Rational(1, 2), Rational(2, 3)}), d, FactorOrigin::Internal);
    info.dominant.push_back(de);
    info.secondary.push_back(b.edge(pop, d, EdgeKind::ImplicitSecondary, false));
    b.g.diamonds.push_back(info);
    m.diamond = d;

    std::vector<std::string> downstream = {d};
    int rest = o.max_nodes - static_cast<int>(b.g.nodes.size());
    int consumers = static_cast<int>(uniform(rng, 1, std::max(1, rest)));
    for (int i = 0; i < consumers && static_cast<int>(b.g.nodes.size()) < o.max_nodes; ++i) {
      std::string id = b.node(pick(rng, general));
      attach(id, downstream);
      downstream.push_back(id);
    }
  }

  b.g.reindex();
  m.graph = std::move(b.g);
  m.catalog = random_catalog(rng, o);
  return m;
}

PriceRule random_tiered_rule(std::uint64_t seed, std::int64_t max_bound) {
  Rng rng(seed);
  PriceRule r;
  r.node_class = NodeClass::QueueOp;
  r.unit = "request";
  r.kind = SchemeKind::Tiered;
  int n = static_cast<int>(uniform(rng, 0, 5));
  std::vector<std::int64_t> bounds;
  while (static_cast<int>(bounds.size()) < n) {
    std::int64_t x = uniform(rng, 1, max_bound + max_bound / 5);
    if (std::find(bounds.begin(), bounds.end(), x) == bounds.end()) bounds.push_back(x);
  }
  std::sort(bounds.begin(), bounds.end());
  for (std::int64_t x : bounds) r.tiers.push_back({Rational(x), Rational(uniform(rng, 0, 500), 100)});
  r.tiers.push_back({std::nullopt, Rational(uniform(rng, 0, 500), 100)});
  if (chance(rng, 50)) r.free_allowance = uniform(rng, 0, max_bound / 10);
  return r;
}

std::vector<Rational> brute_force_prices(const PriceRule& rule, std::int64_t max_q) {
  std::vector<Rational> out(static_cast<std::size_t>(max_q) + 1, Rational(0));
  const std::int64_t allowance = rule.free_allowance.floor();
  for (std::int64_t q = 1; q <= max_q; ++q) {
    Rational unit_price = 0;
    std::int64_t b = q - allowance;  // position of unit q among billable units
    if (b >= 1) {
      std::int64_t lo = 0;
      for (const Tier& t : rule.tiers) {
        if (!t.up_to || b <= t.up_to->floor()) {
          if (b > lo) unit_price = t.rate;
          break;
        }
        lo = t.up_to->floor();
      }
    }
    out[static_cast<std::size_t>(q)] = out[static_cast<std::size_t>(q) - 1] + unit_price;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checks

namespace {

std::string describe(std::uint64_t seed, const std::string& what) {
  return "seed " + std::to_string(seed) + ": " + what;
}

Rational exact_amount(const BoundModel& model, const Resolution& values, const std::string& factor_id,
                      const Rational& quantity) {
  for (std::size_t i = 0; i < model.graph.nodes.size(); ++i) {
    const auto& n = model.graph.nodes[i];
    for (std::size_t f = 0; f < n.factors.size(); ++f) {
      if (n.factors[f].id != factor_id) continue;
      if (!n.factors[f].price_key.empty()) return quantity * values.at(n.factors[f].price_key) * Rational(1000000);
      return evaluate_rule_exact(*model.rule_for(i, f), quantity);
    }
  }
  throw Error(ErrorCode::NotFound, "no factor " + factor_id);
}

// Mass reaching each node per unit of flow leaving `from`. Generated nodes
// are already in topological order.
std::map<std::string, Rational> downstream_mass(const CostGraph& g, const Resolution& values, const std::string& from) {
  std::map<std::string, Rational> mass;
  mass[from] = 1;
  for (const auto& n : g.nodes) {
    if (n.id == from) continue;
    Rational m = 0;
    for (std::size_t ei : g.in_edges(n.id)) {
      const FlowEdge& e = g.edges[ei];
      auto it = mass.find(e.from);
      if (it != mass.end()) m += it->second * edge_weight(e, [&](const std::string& k) { return values.at(k); });
    }
    if (!m.is_zero()) mass[n.id] = m;
  }
  return mass;
}

}  // namespace

CheckResult check_oracle_equivalence(int graphs, std::uint64_t seed) {
  CheckResult r;
  int exact_cases = 0, bounded_cases = 0;
  RandomOptions o;
  for (std::uint64_t s = seed; r.cases < graphs; ++s) {
    RandomModel m = random_model(s, o);
    ++r.cases;
    try {
      BoundModel bm = penny::bind(m.graph, m.catalog);
      AssumptionSet none;
      Resolution values = resolve(m.graph, none);
      CostReport ana = monthly_cost(bm, none, 1);
      CostReport sim = simulate_month(bm, none, 1, s);

      bool push_le_tick = true;
      MicroUsd tolerance = 0;
      std::map<std::string, Rational> below;
      if (!m.diamond.empty()) {
        auto counts = monthly_counts_by_id(m.graph, values);
        const DiamondInfo& d = m.graph.diamonds.front();
        Rational dominant = 0, secondary = 0;
        for (std::size_t e : d.dominant)
          dominant += counts.at(m.graph.edges[e].from) * edge_weight(m.graph.edges[e], [&](const std::string& k) {
                        return values.at(k);
                      });
        for (std::size_t e : d.secondary) secondary += counts.at(m.graph.edges[e].from);
        push_le_tick = dominant <= secondary;
        below = downstream_mass(m.graph, values, m.diamond);
        // One diamond event priced at unit prices, plus one micro-USD of
        // rounding per factor.
        Rational one_event = 0;
        for (std::size_t i = 0; i < m.graph.nodes.size(); ++i) {
          const auto& n = m.graph.nodes[i];
          auto it = below.find(n.id);
          if (it == below.end()) continue;
          for (std::size_t f = 0; f < n.factors.size(); ++f) {
            const auto& cf = n.factors[f];
            Rational per = cf.scale;
            for (const auto& k : cf.keys) per *= values.at(k);
            Rational unit_price = cf.price_key.empty() ? bm.rule_for(i, f)->rate : values.at(cf.price_key) * Rational(1000000);
            one_event += it->second * per * unit_price;
            tolerance += 1;
          }
        }
        tolerance += one_event.ceil();
      }
      (push_le_tick ? exact_cases : bounded_cases)++;

      if (push_le_tick) {
        CostReport a = ana, b2 = sim;
        a.mode = b2.mode = "";
        if (report_to_json(a) != report_to_json(b2)) r.fail(describe(s, "simulation differs with push <= tick"));
      } else {
        MicroUsd diff = sim.total - ana.total;
        if (diff < 0) diff = -diff;
        if (diff > tolerance)
          r.fail(describe(s, "simulation off by " + std::to_string(diff) + " > " + std::to_string(tolerance)));
        for (const auto& n : ana.nodes) {
          if (below.count(n.id)) continue;
          if (!(sim.node(n.id)->count == n.count)) r.fail(describe(s, "count differs upstream of the diamond at " + n.id));
        }
      }
    } catch (const Error& e) {
      r.fail(describe(s, e.what()));
    }
  }
  r.note = std::to_string(exact_cases) + " with push <= tick, " + std::to_string(bounded_cases) + " otherwise";
  if (exact_cases == 0 || bounded_cases == 0)
    r.fail("generator covered only one regime (exact " + std::to_string(exact_cases) + ", bounded " +
           std::to_string(bounded_cases) + ")");
  return r;
}

CheckResult check_tiered_pricing(int tables, std::int64_t max_q, std::uint64_t seed) {
  CheckResult r;
  for (int t = 0; t < tables; ++t) {
    PriceRule rule = random_tiered_rule(seed + static_cast<std::uint64_t>(t), max_q);
    validate_rule(rule);
    std::vector<Rational> brute = brute_force_prices(rule, max_q);
    for (std::int64_t q = 0; q <= max_q; ++q) {
      ++r.cases;
      const Rational& want = brute[static_cast<std::size_t>(q)];
      Rational got = evaluate_rule_exact(rule, Rational(q));
      if (!(got == want)) {
        r.fail("table " + std::to_string(t) + " q=" + std::to_string(q) + ": " + got.str() + " != " + want.str());
        continue;
      }
      if (evaluate_rule(rule, Rational(q)) != want.round_half_even())
        r.fail("table " + std::to_string(t) + " q=" + std::to_string(q) + ": rounding");
      if (q < max_q) {
        Rational step = brute[static_cast<std::size_t>(q) + 1] - want;
        if (!(marginal_rate(rule, Rational(q)) == step))
          r.fail("table " + std::to_string(t) + " q=" + std::to_string(q) + ": marginal rate");
      }
    }
  }
  return r;
}

CheckResult check_linearity(int cases, std::uint64_t seed) {
  CheckResult r;
  RandomOptions o;  // per_unit rules, no allowances, no fixed fees
  const std::vector<std::int64_t> ks = {2, 3, 5, 10};
  for (std::uint64_t s = seed; r.cases < cases; ++s) {
    RandomModel m = random_model(s, o);
    std::int64_t k = ks[s % ks.size()];
    ++r.cases;
    try {
      BoundModel bm = penny::bind(m.graph, m.catalog);
      AssumptionSet base, scaled;
      Resolution v0 = resolve(m.graph, base);
      for (const auto& key : m.entry_keys) scaled.overrides[key] = v0.at(key) * Rational(k);
      for (const auto& key : m.tick_keys) scaled.overrides[key] = v0.at(key) / Rational(k);
      Resolution v1 = resolve(m.graph, scaled);
      CostReport a = monthly_cost(bm, base, 1);
      CostReport b2 = monthly_cost(bm, scaled, 1);
      for (const auto& n : a.nodes) {
        for (const auto& f : n.factors) {
          if (f.kind != FactorKind::Invocation) continue;
          const FactorLine* g = b2.factor(f.id);
          Rational x = exact_amount(bm, v0, f.id, f.quantity);
          Rational y = exact_amount(bm, v1, g->id, g->quantity);
          if (!(y == x * Rational(k)))
            r.fail(describe(s, f.id + " scaled by " + std::to_string(k) + ": " + y.str() + " vs " + x.str()));
        }
      }
    } catch (const Error& e) {
      r.fail(describe(s, e.what()));
    }
  }
  return r;
}

CheckResult check_month_monotonicity(int cases, std::uint64_t seed) {
  CheckResult r;
  RandomOptions o;
  o.tiered = true;
  o.fixed = true;
  for (std::uint64_t s = seed; r.cases < cases; ++s) {
    RandomModel m = random_model(s, o);
    int month = static_cast<int>(1 + s % 36);
    ++r.cases;
    try {
      BoundModel bm = penny::bind(m.graph, m.catalog);
      AssumptionSet none;
      CostReport a = monthly_cost(bm, none, month);
      CostReport b2 = monthly_cost(bm, none, month + 1);
      for (const auto& n : a.nodes) {
        for (const auto& f : n.factors) {
          const FactorLine* g = b2.factor(f.id);
          if (f.kind == FactorKind::Accumulating && g->amount < f.amount)
            r.fail(describe(s, f.id + " decreased from month " + std::to_string(month)));
          if (f.kind != FactorKind::Accumulating && g->amount != f.amount)
            r.fail(describe(s, f.id + " changed between months"));
        }
      }
    } catch (const Error& e) {
      r.fail(describe(s, e.what()));
    }
  }
  return r;
}

CheckResult check_zero_traffic(int cases, std::uint64_t seed) {
  CheckResult r;
  RandomOptions o;
  o.ticks = false;
  o.diamond = false;
  o.tiered = true;
  o.fixed = true;
  for (std::uint64_t s = seed; r.cases < cases; ++s) {
    RandomModel m = random_model(s, o);
    ++r.cases;
    try {
      BoundModel bm = penny::bind(m.graph, m.catalog);
      AssumptionSet zero;
      for (const auto& key : m.entry_keys) zero.overrides[key] = 0;
      CostReport rep = monthly_cost(bm, zero, static_cast<int>(1 + s % 12));
      MicroUsd fixed = 0;
      for (const auto& n : m.graph.nodes)
        for (const auto& rule : m.catalog->rules)
          if (rule.kind == SchemeKind::FixedMonthly && rule.node_class == n.node_class)
            fixed += rule.rate.round_half_even();
      if (rep.total != fixed)
        r.fail(describe(s, "total " + std::to_string(rep.total) + " != fixed " + std::to_string(fixed)));
    } catch (const Error& e) {
      r.fail(describe(s, e.what()));
    }
  }
  return r;
}

CheckResult check_diamond_outflow(int cases, std::uint64_t seed) {
  CheckResult r;
  RandomOptions o;
  for (std::uint64_t s = seed; r.cases < cases; ++s) {
    RandomModel m = random_model(s, o);
    if (m.diamond.empty()) continue;
    ++r.cases;
    try {
      AssumptionSet none;
      Resolution values = resolve(m.graph, none);
      auto counts = monthly_counts_by_id(m.graph, values);
      Rational dominant = 0, secondary = 0;
      for (std::size_t ei : m.graph.in_edges(m.diamond)) {
        const FlowEdge& e = m.graph.edges[ei];
        Rational flow = counts.at(e.from) * edge_weight(e, [&](const std::string& k) { return values.at(k); });
        (e.kind == EdgeKind::ImplicitDominant ? dominant : secondary) += flow;
      }
      if (counts.at(m.diamond) > min(dominant, secondary))
        r.fail(describe(s, "diamond outflow " + counts.at(m.diamond).str() + " exceeds min inflow"));
    } catch (const Error& e) {
      r.fail(describe(s, e.what()));
    }
  }
  return r;
}

namespace {

dsl::AnnotationEntries random_entries(Rng& rng) {
  const std::vector<std::string> keys = {"memoryGb", "note", "timeout", "probability", "payloadBytes", "tag"};
  const std::vector<std::string> texts = {"plain", "with \"quotes\"", "tab\there", "unicode \xc3\xbc\xe2\x82\xac",
                                          "{braces}", "back\\slash", ""};
  dsl::AnnotationEntries out;
  int n = static_cast<int>(uniform(rng, 1, 3));
  std::vector<std::string> used;
  while (static_cast<int>(out.size()) < n) {
    std::string k = pick(rng, keys);
    if (std::find(used.begin(), used.end(), k) != used.end()) continue;
    used.push_back(k);
    switch (uniform(rng, 0, 2)) {
      case 0: out.emplace_back(k, dsl::Scalar::of_number(Rational(uniform(rng, 0, 100000), 100))); break;
      case 1: out.emplace_back(k, dsl::Scalar::of_string(pick(rng, texts))); break;
      default: out.emplace_back(k, dsl::Scalar::of_duration(uniform(rng, 0, 7200))); break;
    }
  }
  return out;
}

}  // namespace

CheckResult check_annotation_roundtrip(const fs::path& corpus_dir, std::uint64_t seed) {
  CheckResult r;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(corpus_dir))
    if (entry.path().extension() == ".w") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.size() != 20) r.fail("corpus holds " + std::to_string(files.size()) + " files, expected 20");
  Rng rng(seed);
  for (const auto& path : files) {
    SourceFile src = load_source(path);
    dsl::SyntaxTree tree;
    try {
      tree = dsl::parse(src);
    } catch (const Error& e) {
      r.fail(path.filename().string() + ": " + e.what());
      continue;
    }
    for (dsl::NodeId id = 0; id < tree.size(); ++id) {
      const auto& node = tree.node(id);
      if (!dsl::is_expression(node.kind)) continue;
      ++r.cases;
      std::string where = path.filename().string() + ":" + std::to_string(node.span.start_line) + ":" +
                          std::to_string(node.span.start_col) + " (" + std::string(dsl::to_string(node.kind)) + ")";
      try {
        dsl::AnnotationEntries entries = random_entries(rng);
        SourceFile written = dsl::write_annotation(src, node.span, entries);
        if (dsl::strip_annotations(written).source.text != src.text) {
          r.fail(where + ": strip does not restore the original bytes");
          continue;
        }
        auto anns = dsl::read_annotations(dsl::parse(written));
        std::string target(tree.text_of(id));
        if (anns.size() != 1) {
          r.fail(where + ": read back " + std::to_string(anns.size()) + " annotations");
          continue;
        }
        std::string got_target =
            written.text.substr(anns[0].target_span.start_byte, anns[0].target_span.size());
        if (got_target != target) r.fail(where + ": target became `" + got_target + "`");
        if (anns[0].entries != entries) r.fail(where + ": entries differ after read-back");
      } catch (const Error& e) {
        r.fail(where + ": " + e.what());
      }
    }
  }
  return r;
}

CommandResult run_command(const std::string& command) {
  CommandResult res;
  FILE* p = popen(command.c_str(), "r");
  if (!p) return res;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) res.out.append(buf.data(), n);
  int status = pclose(p);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

}  // namespace penny::testing
