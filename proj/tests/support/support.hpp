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

// Shared generators and checkers for the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "penny/cost_graph.hpp"
#include "penny/estimator.hpp"
#include "penny/pricing.hpp"

namespace penny::testing {

std::filesystem::path source_dir();
std::string read_file(const std::filesystem::path& path);
SourceFile load_source(const std::filesystem::path& path);

// The fixture model with the documented assumptions.
CostGraph fixture_graph();
AssumptionSet fixture_assumptions();
std::shared_ptr<const Catalog> bundled_catalog(const std::string& id);

struct RandomOptions {
  bool diamond = true;     // may add one push/pop diamond
  bool ticks = true;       // may add a ScheduleTick entry
  bool tiered = false;     // tiered rules and allowances in the catalog
  bool fixed = false;      // fixed_monthly rules in the catalog
  int max_nodes = 10;
};

struct RandomModel {
  CostGraph graph;
  std::shared_ptr<const Catalog> catalog;
  std::vector<std::string> entry_keys;  // requestsPerMonth slots
  std::vector<std::string> tick_keys;   // rateSeconds slots
  std::string diamond;                  // node id or empty
};

// Every slot carries its value as a default, so an empty AssumptionSet
// resolves the whole model.
RandomModel random_model(std::uint64_t seed, const RandomOptions& options);

// Random tier table with integer bounds, for the brute-force check.
PriceRule random_tiered_rule(std::uint64_t seed, std::int64_t max_bound);
// Price of `q` units, summed one unit at a time.
std::vector<Rational> brute_force_prices(const PriceRule& rule, std::int64_t max_q);

struct CheckResult {
  std::int64_t cases = 0;
  std::int64_t failures = 0;
  std::string first_failure;
  std::string note;  // coverage summary
  bool ok() const { return failures == 0 && cases > 0; }
  void fail(const std::string& what);
  void merge(const CheckResult& other);
};

CheckResult check_oracle_equivalence(int graphs, std::uint64_t seed);
CheckResult check_tiered_pricing(int tables, std::int64_t max_q, std::uint64_t seed);
CheckResult check_linearity(int cases, std::uint64_t seed);
CheckResult check_month_monotonicity(int cases, std::uint64_t seed);
CheckResult check_zero_traffic(int cases, std::uint64_t seed);
CheckResult check_diamond_outflow(int cases, std::uint64_t seed);
CheckResult check_annotation_roundtrip(const std::filesystem::path& corpus_dir, std::uint64_t seed);

// Runs a command through the shell; captures stdout only.
struct CommandResult {
  int exit_code = -1;
  std::string out;
};
CommandResult run_command(const std::string& command);
std::string shell_quote(const std::string& s);

}  // namespace penny::testing
