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
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "../support/support.hpp"
#include "penny/error.hpp"
#include "penny/service.hpp"

namespace penny::service {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Query = std::multimap<std::string, std::string>;

Config test_config() {
  Config c;
  c.catalog_dir = testing::source_dir() / "catalogs";
  return c;
}

std::string fixture_text() {
  return testing::read_file(testing::source_dir() / "tests/fixtures/transcription.w");
}

json fixture_assumptions_json() {
  return json::parse(testing::read_file(testing::source_dir() / "tests/fixtures/transcription.assumptions.json"));
}

class ServiceTest : public ::testing::Test {
 protected:
  Service svc{test_config()};

  std::string open_session(const json& extra = json::object()) {
    json req = {{"source", fixture_text()}, {"catalogs", {"acme-v1", "nimbus-v1"}},
                {"assumptions", fixture_assumptions_json()}};
    req.update(extra);
    Response r = svc.handle("POST", "/sessions", {}, req.dump());
    EXPECT_EQ(r.status, 201) << r.body;
    return json::parse(r.body)["session"].get<std::string>();
  }
};

TEST_F(ServiceTest, ListsCatalogs) {
  Response r = svc.handle("GET", "/catalogs", {}, "");
  ASSERT_EQ(r.status, 200);
  auto j = json::parse(r.body);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["id"], "acme-v1");
}

TEST_F(ServiceTest, CostMatchesGoldenReport) {
  std::string id = open_session();
  Response r = svc.handle("GET", "/sessions/" + id + "/cost", Query{{"month", "1"}, {"vendor", "acme-v1"}}, "");
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.body, testing::read_file(testing::source_dir() / "tests/golden/transcription.acme-v1.month1.json"));
  EXPECT_EQ(r.headers.at("X-Penny-Source-Version"), "1");
}

TEST_F(ServiceTest, CompareAndGraph) {
  std::string id = open_session();
  Response c = svc.handle("GET", "/sessions/" + id + "/compare", Query{{"month", "2"}}, "");
  ASSERT_EQ(c.status, 200) << c.body;
  EXPECT_EQ(json::parse(c.body)["vendors"].size(), 2u);
  Response g = svc.handle("GET", "/sessions/" + id + "/graph", Query{{"format", "dot"}}, "");
  EXPECT_EQ(g.status, 200);
  EXPECT_EQ(g.content_type, "text/vnd.graphviz");
  EXPECT_EQ(svc.handle("GET", "/sessions/" + id + "/graph", Query{{"format", "svg"}}, "").status, 400);
}

TEST_F(ServiceTest, UnresolvedCostIsConflict) {
  Response r = svc.handle("POST", "/sessions", {}, json{{"source", fixture_text()}, {"catalogs", {"acme-v1"}}}.dump());
  ASSERT_EQ(r.status, 201);
  auto j = json::parse(r.body);
  EXPECT_FALSE(j["unresolved"].empty());
  Response cost = svc.handle("GET", "/sessions/" + j["session"].get<std::string>() + "/cost", {}, "");
  EXPECT_EQ(cost.status, 409);
  EXPECT_EQ(json::parse(cost.body)["error"]["code"], "UnresolvedAssumption");
}

TEST_F(ServiceTest, PatchOverrideBumpsVersion) {
  std::string id = open_session();
  Response r = svc.handle("PATCH", "/sessions/" + id + "/assumptions", {}, R"({"search.requestsPerMonth": 600000})");
  ASSERT_EQ(r.status, 200) << r.body;
  auto j = json::parse(r.body);
  EXPECT_EQ(j["version"], 2);
  EXPECT_EQ(svc.handle("PATCH", "/sessions/" + id + "/assumptions", {}, R"({"no.such": 1})").status, 404);
  EXPECT_EQ(svc.handle("PATCH", "/sessions/" + id + "/assumptions", {}, R"({"search.requestsPerMonth": -5})").status,
            422);
  EXPECT_EQ(svc.handle("PATCH", "/sessions/" + id + "/assumptions", {}, "not json").status, 400);
}

TEST_F(ServiceTest, PersistWritesAnnotationThroughToFile) {
  fs::path tmp = fs::temp_directory_path() / "penny_service_persist.w";
  { std::ofstream(tmp, std::ios::binary) << fixture_text(); }
  json req = {{"path", tmp.string()}, {"catalogs", {"acme-v1"}}, {"assumptions", fixture_assumptions_json()}};
  Response created = svc.handle("POST", "/sessions", {}, req.dump());
  ASSERT_EQ(created.status, 201) << created.body;
  std::string sid = json::parse(created.body)["session"];
  Response r = svc.handle("PATCH", "/sessions/" + sid + "/assumptions", {},
                          R"({"videoStorage.put.payloadBytes": 1000, "persist": true})");
  ASSERT_EQ(r.status, 200) << r.body;
  std::string on_disk = testing::read_file(tmp);
  EXPECT_NE(on_disk.find("payloadBytes: 1000"), std::string::npos);
  Response src = svc.handle("GET", "/sessions/" + sid + "/source", {}, "");
  EXPECT_EQ(json::parse(src.body)["text"], on_disk);
  Response a = svc.handle("GET", "/sessions/" + sid + "/assumptions", {}, "");
  for (const auto& e : json::parse(a.body)["catalogue"]) {
    if (e["id"] == "videoStorage.put.payloadBytes") {
      EXPECT_EQ(e["source"], "annotation");
    }
  }
  fs::remove(tmp);
}

TEST_F(ServiceTest, BlackBoxLink) {
  std::string id = open_session();
  auto graph = json::parse(svc.handle("GET", "/sessions/" + id + "/graph", {}, "").body)["graph"];
  std::string http;
  for (const auto& n : graph["nodes"])
    if (n["class"] == "ExternalHttpCall") http = n["id"];
  ASSERT_FALSE(http.empty());
  std::string path = "/sessions/" + id + "/black-box-link";
  EXPECT_EQ(svc.handle("POST", path, {}, json{{"node", http}, {"route", "/callback"}}.dump()).status, 409);
  EXPECT_EQ(svc.handle("POST", path, {}, json{{"node", http}, {"route", "/missing"}}.dump()).status, 404);
  EXPECT_EQ(svc.handle("POST", path, {}, json{{"node", "nope"}, {"route", "/search"}}.dump()).status, 404);
  Response ok = svc.handle("POST", path, {}, json{{"node", http}, {"route", "GET /search"}}.dump());
  ASSERT_EQ(ok.status, 200) << ok.body;
  Response src = svc.handle("GET", "/sessions/" + id + "/source", {}, "");
  EXPECT_NE(json::parse(src.body)["text"].get<std::string>().find("/callback, GET /search"), std::string::npos);
}

TEST_F(ServiceTest, ErrorsAndUnknownPaths) {
  EXPECT_EQ(svc.handle("GET", "/sessions/s999/cost", {}, "").status, 404);
  EXPECT_EQ(svc.handle("GET", "/nothing", {}, "").status, 404);
  Response bad = svc.handle("POST", "/sessions", {}, json{{"source", "let x = ;"}}.dump());
  EXPECT_EQ(bad.status, 422);
  auto j = json::parse(bad.body);
  EXPECT_EQ(j["error"]["code"], "ParseError");
  EXPECT_TRUE(j["error"].contains("span"));
  std::string id = open_session();
  EXPECT_EQ(svc.handle("GET", "/sessions/" + id + "/cost", Query{{"month", "0"}}, "").status, 400);
  EXPECT_EQ(svc.handle("GET", "/sessions/" + id + "/cost", Query{{"vendor", "zeta"}}, "").status, 404);
}

TEST(ServiceCorsTest, PreflightWhenOriginConfigured) {
  Config c = test_config();
  c.ui_origin = "http://localhost:5173";
  Service svc(c);
  Response r = svc.handle("OPTIONS", "/sessions", {}, "");
  EXPECT_EQ(r.status, 204);
  EXPECT_EQ(r.headers.at("Access-Control-Allow-Origin"), "http://localhost:5173");
}

TEST(ServiceHttpTest, ServesOverHttp) {
  Service svc(test_config());
  int port = svc.bind_ephemeral();
  ASSERT_GT(port, 0);
  std::thread t([&] { svc.listen_after_bind(); });
  httplib::Client cli("127.0.0.1", port);
  auto list = cli.Get("/catalogs");
  ASSERT_TRUE(list);
  EXPECT_EQ(list->status, 200);
  json req = {{"source", fixture_text()}, {"catalogs", {"acme-v1"}}, {"assumptions", fixture_assumptions_json()}};
  auto created = cli.Post("/sessions", req.dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  std::string id = json::parse(created->body)["session"];
  auto cost = cli.Get("/sessions/" + id + "/cost?month=1");
  ASSERT_TRUE(cost);
  EXPECT_EQ(cost->body, testing::read_file(testing::source_dir() / "tests/golden/transcription.acme-v1.month1.json"));
  EXPECT_EQ(cost->get_header_value("X-Penny-Source-Version"), "1");
  auto patched = cli.Patch("/sessions/" + id + "/assumptions", R"({"upload.requestsPerMonth": 1})", "application/json");
  ASSERT_TRUE(patched);
  EXPECT_EQ(patched->status, 200);
  svc.stop();
  t.join();
}

TEST(ServiceHttpTest, ParseListen) {
  EXPECT_EQ(parse_listen("0.0.0.0:9000"), std::make_pair(std::string("0.0.0.0"), 9000));
  EXPECT_THROW(parse_listen("nope"), Error);
  EXPECT_THROW(parse_listen("host:99999"), Error);
}

}  // namespace
}  // namespace penny::service
