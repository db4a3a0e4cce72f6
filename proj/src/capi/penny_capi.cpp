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
#include "penny/penny.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "penny/error.hpp"
#include "penny/estimator.hpp"
#include "penny/extractor.hpp"
#include "penny/pricing.hpp"
#include "penny/service.hpp"

struct penny_program {
  std::shared_ptr<const penny::SourceFile> source;
  penny::dsl::SyntaxTree tree;
  penny::CostGraph graph;
  penny::AssumptionSet assumptions;
};

struct penny_catalog {
  std::shared_ptr<const penny::Catalog> catalog;
};

namespace {

thread_local std::string last_error;

penny_status status_of(penny::ErrorCode code) { return static_cast<penny_status>(static_cast<int>(code) + 1); }

template <typename F>
penny_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return PENNY_OK;
  } catch (const penny::Error& e) {
    last_error = penny::diagnostic_json(e);
    return status_of(e.code());
  } catch (const std::exception& e) {
    last_error = penny::diagnostic_json(penny::Error(penny::ErrorCode::Internal, e.what()));
    return PENNY_E_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw penny::Error(penny::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::unique_ptr<penny_program> analyze(penny::SourceFile source) {
  auto p = std::make_unique<penny_program>();
  p->source = std::make_shared<const penny::SourceFile>(std::move(source));
  p->tree = penny::dsl::parse(*p->source);
  p->graph = penny::extract(p->tree);
  return p;
}

}  // namespace

extern "C" {

const char* penny_status_name(penny_status status) {
  if (status == PENNY_OK) return "Ok";
  if (status < PENNY_OK || status > PENNY_E_INTERNAL) return "Unknown";
  static thread_local std::string name;
  name = std::string(penny::to_string(static_cast<penny::ErrorCode>(static_cast<int>(status) - 1)));
  return name.c_str();
}

const char* penny_last_error(void) { return last_error.c_str(); }

void penny_string_free(char* s) { std::free(s); }

penny_status penny_program_open(const char* path, penny_program** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw penny::Error(penny::ErrorCode::Io, std::string("cannot read ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = analyze(penny::SourceFile{path, ss.str(), 1}).release();
  });
}

penny_status penny_program_from_source(const char* name, const char* text, penny_program** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = analyze(penny::SourceFile{name ? name : "<memory>", text, 1}).release();
  });
}

void penny_program_free(penny_program* program) { delete program; }

penny_status penny_program_assume(penny_program* program, const char* key, const char* value) {
  return guarded([&] {
    require(program, "program");
    require(key, "key");
    require(value, "value");
    auto v = penny::Rational::try_parse(value);
    if (!v)
      throw penny::Error(penny::ErrorCode::InvalidArgument, std::string("value for ") + key + " is not a number")
          .with_details({key});
    program->assumptions.overrides[key] = *v;
  });
}

penny_status penny_program_assume_json(penny_program* program, const char* json) {
  return guarded([&] {
    require(program, "program");
    require(json, "json");
    for (const auto& [k, v] : penny::assumptions_from_json(json).overrides) program->assumptions.overrides[k] = v;
  });
}

penny_status penny_program_unknown_keys(const penny_program* program, char** out) {
  return guarded([&] {
    require(program, "program");
    require(out, "out");
    *out = dup(nlohmann::json(penny::unknown_keys(program->graph, program->assumptions)).dump());
  });
}

penny_status penny_program_findings(const penny_program* program, char** out) {
  return guarded([&] {
    require(program, "program");
    require(out, "out");
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& f : penny::validate(program->graph))
      j.push_back({{"code", f.code}, {"subject", f.subject}, {"message", f.message}});
    *out = dup(j.dump());
  });
}

penny_status penny_program_graph(const penny_program* program, int dot, char** out) {
  return guarded([&] {
    require(program, "program");
    require(out, "out");
    *out = dup(dot ? penny::graph_to_dot(program->graph) : penny::graph_to_json(program->graph));
  });
}

penny_status penny_program_catalogue(const penny_program* program, char** out) {
  return guarded([&] {
    require(program, "program");
    require(out, "out");
    *out = dup(penny::catalogue_to_json(penny::factor_catalogue(program->graph, program->assumptions)));
  });
}

penny_status penny_catalog_load(const char* path, penny_catalog** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<penny_catalog>();
    c->catalog = std::make_shared<const penny::Catalog>(penny::load_catalog(path));
    *out = c.release();
  });
}

void penny_catalog_free(penny_catalog* catalog) { delete catalog; }

penny_status penny_cost(const penny_program* program, const penny_catalog* catalog, int month, char** out) {
  return guarded([&] {
    require(program, "program");
    require(catalog, "catalog");
    require(out, "out");
    auto model = penny::bind(program->graph, catalog->catalog);
    *out = dup(penny::report_to_json(penny::monthly_cost(model, program->assumptions, month)));
  });
}

penny_status penny_compare(const penny_program* program, const penny_catalog* const* catalogs, size_t count,
                           int month, char** out) {
  return guarded([&] {
    require(program, "program");
    require(catalogs, "catalogs");
    require(out, "out");
    std::vector<std::shared_ptr<const penny::Catalog>> list;
    for (size_t i = 0; i < count; ++i) {
      require(catalogs[i], "catalog");
      list.push_back(catalogs[i]->catalog);
    }
    *out = dup(penny::comparison_to_json(penny::compare_catalogs(program->graph, program->assumptions, list, month)));
  });
}

penny_status penny_simulate(const penny_program* program, const penny_catalog* catalog, int month, uint64_t seed,
                            char** out) {
  return guarded([&] {
    require(program, "program");
    require(catalog, "catalog");
    require(out, "out");
    auto model = penny::bind(program->graph, catalog->catalog);
    *out = dup(penny::report_to_json(penny::simulate_month(model, program->assumptions, month, seed)));
  });
}

penny_status penny_invocation_cost(const penny_program* program, const penny_catalog* catalog, const char* entry,
                                   char** out) {
  return guarded([&] {
    require(program, "program");
    require(catalog, "catalog");
    require(entry, "entry");
    require(out, "out");
    auto model = penny::bind(program->graph, catalog->catalog);
    auto c = penny::invocation_cost(model, program->assumptions, entry);
    nlohmann::ordered_json j;
    auto text = [](const penny::Rational& r) {
      auto d = r.decimal();
      return d ? *d : r.str();
    };
    j["entry"] = c.entry;
    j["micro_usd"] = text(c.micro_usd);
    j["display"] = "$" + (c.micro_usd / penny::Rational(1'000'000)).fixed(8);
    j["marginal"] = c.marginal;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& [id, v] : c.per_node) j["nodes"].push_back({{"id", id}, {"micro_usd", text(v)}});
    *out = dup(j.dump(2) + "\n");
  });
}

penny_status penny_serve(const char* listen, const char* catalog_dir, const char* ui_origin) {
  return guarded([&] {
    require(listen, "listen");
    penny::service::Config config;
    auto [host, port] = penny::service::parse_listen(listen);
    config.host = host;
    config.port = port;
    if (catalog_dir) config.catalog_dir = catalog_dir;
    if (ui_origin) config.ui_origin = ui_origin;
    penny::service::Service service(config);
    if (!service.listen())
      throw penny::Error(penny::ErrorCode::Io, std::string("cannot listen on ") + listen);
  });
}

}  // extern "C"
