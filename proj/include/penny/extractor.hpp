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

#include <optional>
#include <string>
#include <vector>

#include "penny/cost_graph.hpp"
#include "penny/dsl.hpp"

namespace penny {

enum class ResourceType { Api, Bucket, Queue, Table, Schedule, Function };

std::string_view to_string(ResourceType t);

struct ResourceDecl {
  std::string id;
  ResourceType type = ResourceType::Api;
  std::string binding_name;  // empty when anonymous
  Span decl_span;
  bool implicit = false;  // Function behind an Api route handler
  std::vector<std::pair<std::string, dsl::Scalar>> props;
  dsl::AnnotationEntries annotations;
  dsl::NodeId node = dsl::kNoNode;
};

// Pseudo resource id used for outbound HTTP calls.
inline constexpr std::string_view kHttpResource = "http";

struct ResourceCall {
  std::string resource_id;
  std::string method;
  Span call_span;
  std::optional<Span> enclosing_closure;
  std::vector<std::pair<std::string, dsl::Scalar>> args_summary;
  dsl::AnnotationEntries annotations;
  dsl::NodeId node = dsl::kNoNode;
};

struct TriggerRule {
  ResourceType source_type;
  std::string source_method;
  ResourceType target_type;
  std::string registration_method;
  EdgeKind edge_kind;
};

const std::vector<TriggerRule>& default_trigger_rules();

std::vector<ResourceDecl> find_resources(const dsl::SyntaxTree& tree);
std::vector<ResourceCall> resolve_usages(const dsl::SyntaxTree& tree,
                                         const std::vector<ResourceDecl>& resources);
CostGraph build_graph(const dsl::SyntaxTree& tree, const std::vector<ResourceDecl>& resources,
                      const std::vector<ResourceCall>& calls,
                      const std::vector<TriggerRule>& rules = default_trigger_rules());

// find_resources + resolve_usages + build_graph with the default rules.
CostGraph extract(const dsl::SyntaxTree& tree);

// "/upload" -> "upload", "/" -> "root", "/users/{id}" -> "users_id".
std::string route_slug(std::string_view route);

}  // namespace penny
