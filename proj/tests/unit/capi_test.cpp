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
#include <gtest/gtest.h>

#include <json.hpp>
#include <string>

#include "../support/support.hpp"
#include "penny/penny.h"

namespace {

using nlohmann::json;

std::string path_of(const std::string& rel) { return (penny::testing::source_dir() / rel).string(); }

std::string take(char* s) {
  std::string out = s ? s : "";
  penny_string_free(s);
  return out;
}

class CApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(penny_program_open(path_of("tests/fixtures/transcription.w").c_str(), &program), PENNY_OK);
    std::string a = penny::testing::read_file(path_of("tests/fixtures/transcription.assumptions.json"));
    ASSERT_EQ(penny_program_assume_json(program, a.c_str()), PENNY_OK);
    ASSERT_EQ(penny_catalog_load(path_of("catalogs/acme-v1.json").c_str(), &acme), PENNY_OK);
  }
  void TearDown() override {
    penny_program_free(program);
    penny_catalog_free(acme);
  }
  penny_program* program = nullptr;
  penny_catalog* acme = nullptr;
};

TEST_F(CApiTest, CostMatchesGolden) {
  char* out = nullptr;
  ASSERT_EQ(penny_cost(program, acme, 1, &out), PENNY_OK);
  EXPECT_EQ(take(out), penny::testing::read_file(path_of("tests/golden/transcription.acme-v1.month1.json")));
  EXPECT_STREQ(penny_last_error(), "");
}

TEST_F(CApiTest, AssumeSingleValue) {
  ASSERT_EQ(penny_program_assume(program, "search.requestsPerMonth", "0"), PENNY_OK);
  char* out = nullptr;
  ASSERT_EQ(penny_cost(program, acme, 1, &out), PENNY_OK);
  EXPECT_LT(json::parse(take(out))["total_micro"].get<long long>(), 718115135);
  EXPECT_EQ(penny_program_assume(program, "x", "abc"), PENNY_E_INVALID_ARGUMENT);
}

TEST_F(CApiTest, UnresolvedAssumptionCode) {
  penny_program* bare = nullptr;
  ASSERT_EQ(penny_program_open(path_of("tests/fixtures/transcription.w").c_str(), &bare), PENNY_OK);
  char* out = nullptr;
  EXPECT_EQ(penny_cost(bare, acme, 1, &out), PENNY_E_UNRESOLVED_ASSUMPTION);
  EXPECT_EQ(out, nullptr);
  auto diag = json::parse(penny_last_error());
  EXPECT_EQ(diag["code"], "UnresolvedAssumption");
  EXPECT_FALSE(diag["details"].empty());
  EXPECT_STREQ(penny_status_name(PENNY_E_UNRESOLVED_ASSUMPTION), "UnresolvedAssumption");
  penny_program_free(bare);
}

TEST_F(CApiTest, GraphCatalogueAndFindings) {
  char* out = nullptr;
  ASSERT_EQ(penny_program_graph(program, 0, &out), PENNY_OK);
  EXPECT_EQ(json::parse(take(out))["nodes"].size(), 14u);
  ASSERT_EQ(penny_program_graph(program, 1, &out), PENNY_OK);
  EXPECT_EQ(take(out).rfind("digraph", 0), 0u);
  ASSERT_EQ(penny_program_catalogue(program, &out), PENNY_OK);
  EXPECT_TRUE(json::parse(take(out)).is_array());
  ASSERT_EQ(penny_program_findings(program, &out), PENNY_OK);
  EXPECT_EQ(take(out), "[]");
  ASSERT_EQ(penny_program_assume(program, "bogus.key", "1"), PENNY_OK);
  ASSERT_EQ(penny_program_unknown_keys(program, &out), PENNY_OK);
  EXPECT_EQ(json::parse(take(out)), json::array({"bogus.key"}));
}

TEST_F(CApiTest, CompareSimulateInvocation) {
  penny_catalog* nimbus = nullptr;
  ASSERT_EQ(penny_catalog_load(path_of("catalogs/nimbus-v1.json").c_str(), &nimbus), PENNY_OK);
  const penny_catalog* both[] = {acme, nimbus};
  char* out = nullptr;
  ASSERT_EQ(penny_compare(program, both, 2, 1, &out), PENNY_OK);
  EXPECT_EQ(json::parse(take(out))["vendors"].size(), 2u);
  ASSERT_EQ(penny_simulate(program, acme, 1, 5, &out), PENNY_OK);
  EXPECT_EQ(json::parse(take(out))["total_micro"], 718115135);
  ASSERT_EQ(penny_invocation_cost(program, acme, "endpoint@212-366", &out), PENNY_OK);
  EXPECT_FALSE(take(out).empty());
  EXPECT_EQ(penny_invocation_cost(program, acme, "endpoint@727-871", &out), PENNY_E_NOT_AN_ENTRY_POINT);
  penny_catalog_free(nimbus);
}

TEST(CApiErrors, BadInputs) {
  penny_program* p = nullptr;
  EXPECT_EQ(penny_program_open("/nonexistent/file.w", &p), PENNY_E_IO);
  EXPECT_EQ(p, nullptr);
  EXPECT_EQ(penny_program_from_source("x.w", "let x = ;", &p), PENNY_E_PARSE);
  EXPECT_EQ(json::parse(penny_last_error())["span"]["start_col"], 9);
  EXPECT_EQ(penny_program_open(nullptr, &p), PENNY_E_INVALID_ARGUMENT);
  penny_catalog* c = nullptr;
  EXPECT_EQ(penny_catalog_load("/nonexistent.json", &c), PENNY_E_IO);
  penny_program_free(nullptr);
  penny_catalog_free(nullptr);
  penny_string_free(nullptr);
}

}  // namespace
