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
#include "penny/service.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "penny/dsl.hpp"
#include "penny/error.hpp"
#include "penny/estimator.hpp"
#include "penny/extractor.hpp"
#include "penny/pricing.hpp"

namespace penny::service {
namespace {

using nlohmann::ordered_json;

constexpr const char* kVersionHeader = "X-Penny-Source-Version";

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownRoute:
      return 404;
    case ErrorCode::Conflict:
    case ErrorCode::UnresolvedAssumption:
      return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownAssumption:
      return 400;
    case ErrorCode::Io:
    case ErrorCode::Internal:
    case ErrorCode::Overflow:
      return 500;
    default:
      return 422;
  }
}

Response json_response(int status, const std::string& body) {
  Response r;
  r.status = status;
  r.body = body;
  return r;
}

Response error_response(const Error& e) {
  return json_response(status_for(e.code()), "{\"error\":" + diagnostic_json(e) + "}\n");
}

Response error_response(ErrorCode code, const std::string& message) { return error_response(Error(code, message)); }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<Rational> json_number(const ordered_json& v) {
  try {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_float()) return Rational::from_double(v.get<double>());
    if (v.is_string()) return Rational::try_parse(v.get<std::string>());
  } catch (const Error&) {
  }
  return std::nullopt;
}

ordered_json parse_body(const std::string& body) {
  try {
    return body.empty() ? ordered_json::object() : ordered_json::parse(body);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

int parse_month(const std::multimap<std::string, std::string>& query) {
  auto it = query.find("month");
  if (it == query.end()) return 1;
  const std::string& s = it->second;
  if (s.empty() || s.size() > 6 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw Error(ErrorCode::InvalidArgument, "month must be a positive integer");
  int m = std::stoi(s);
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "month must be >= 1");
  return m;
}

std::string query_value(const std::multimap<std::string, std::string>& query, const std::string& key) {
  auto it = query.find(key);
  return it == query.end() ? std::string() : it->second;
}

// Immutable snapshot of a session; writers publish a new one.
struct State {
  int version = 1;
  std::shared_ptr<const SourceFile> source;
  dsl::SyntaxTree tree;
  CostGraph graph;
  std::vector<std::string> catalog_ids;
  std::vector<std::shared_ptr<const Catalog>> catalogs;
  std::vector<BoundModel> bound;
  AssumptionSet assumptions;
  std::filesystem::path path;  // write-through target, may be empty
};

struct Session {
  std::mutex write;
  mutable std::shared_mutex read;
  std::shared_ptr<const State> state;

  std::shared_ptr<const State> snapshot() const {
    std::shared_lock lock(read);
    return state;
  }
  void publish(std::shared_ptr<const State> next) {
    std::unique_lock lock(read);
    state = std::move(next);
  }
};

std::shared_ptr<State> analyze(SourceFile source, std::vector<std::string> catalog_ids,
                               std::vector<std::shared_ptr<const Catalog>> catalogs, AssumptionSet assumptions,
                               std::filesystem::path path) {
  auto st = std::make_shared<State>();
  st->version = source.version;
  st->source = std::make_shared<const SourceFile>(std::move(source));
  st->tree = dsl::parse(*st->source);
  st->graph = extract(st->tree);
  st->catalog_ids = std::move(catalog_ids);
  st->catalogs = std::move(catalogs);
  for (const auto& c : st->catalogs) st->bound.push_back(penny::bind(st->graph, c));
  st->assumptions = std::move(assumptions);
  st->path = std::move(path);
  return st;
}

ordered_json catalogue_of(const State& st) {
  return ordered_json::parse(catalogue_to_json(factor_catalogue(st.graph, st.assumptions)));
}

ordered_json totals_of(const State& st) {
  ordered_json totals = ordered_json::object();
  Resolution values = resolve(st.graph, st.assumptions);
  bool complete = values.unresolved().empty();
  for (std::size_t i = 0; i < st.bound.size(); ++i) {
    if (!complete) {
      totals[st.catalog_ids[i]] = nullptr;
      continue;
    }
    MicroUsd total = monthly_cost(st.bound[i], st.assumptions, 1).total;
    totals[st.catalog_ids[i]] = {{"total_micro", total}, {"total_display", format_usd(total)}};
  }
  return totals;
}

ordered_json span_json(const Span& s) {
  return {{"start_byte", s.start_byte}, {"end_byte", s.end_byte}, {"start_line", s.start_line},
          {"start_col", s.start_col},   {"end_line", s.end_line}, {"end_col", s.end_col}};
}

}  // namespace

struct Service::Impl {
  Config config;
  std::shared_mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::atomic<std::uint64_t> next_id{1};
  httplib::Server server;
  std::atomic<bool> running{false};

  std::shared_ptr<const Catalog> load(const std::string& id) {
    if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos)
      throw Error(ErrorCode::NotFound, "unknown catalog '" + id + "'");
    std::filesystem::path p = config.catalog_dir / (id + ".json");
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::NotFound, "unknown catalog '" + id + "'");
    return std::make_shared<const Catalog>(load_catalog(p));
  }

  std::vector<std::string> catalog_ids() const {
    std::vector<std::string> ids;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(config.catalog_dir, ec))
      if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::shared_lock lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::NotFound, "unknown session '" + id + "'");
    return it->second;
  }

  std::size_t vendor_index(const State& st, const std::string& vendor) {
    if (st.bound.empty()) throw Error(ErrorCode::NotFound, "session has no catalogs");
    if (vendor.empty()) return 0;
    for (std::size_t i = 0; i < st.catalog_ids.size(); ++i)
      if (st.catalog_ids[i] == vendor || st.catalogs[i]->vendor_id == vendor) return i;
    throw Error(ErrorCode::NotFound, "vendor '" + vendor + "' is not bound to this session");
  }

  Response with_version(Response r, const State& st) {
    r.headers[kVersionHeader] = std::to_string(st.version);
    return r;
  }

  // ---- endpoints ----

  Response get_catalogs() {
    ordered_json out = ordered_json::array();
    for (const auto& id : catalog_ids()) {
      try {
        auto c = load(id);
        out.push_back({{"id", id}, {"vendor_id", c->vendor_id}, {"version", c->version}, {"rules", c->rules.size()}});
      } catch (const Error& e) {
        out.push_back({{"id", id}, {"error", ordered_json::parse(diagnostic_json(e))}});
      }
    }
    return json_response(200, out.dump(2) + "\n");
  }

  Response create_session(const std::string& body) {
    ordered_json req = parse_body(body);
    if (!req.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
    std::filesystem::path path;
    std::string text;
    if (req.contains("path")) {
      if (!req["path"].is_string()) throw Error(ErrorCode::InvalidArgument, "path must be a string");
      path = req["path"].get<std::string>();
      if (!req.contains("source")) text = read_file(path);
    }
    if (req.contains("source")) {
      if (!req["source"].is_string()) throw Error(ErrorCode::InvalidArgument, "source must be a string");
      text = req["source"].get<std::string>();
    } else if (path.empty()) {
      throw Error(ErrorCode::InvalidArgument, "body needs a source or a path");
    }
    std::vector<std::string> ids;
    if (req.contains("catalogs")) {
      if (!req["catalogs"].is_array()) throw Error(ErrorCode::InvalidArgument, "catalogs must be an array of ids");
      for (const auto& c : req["catalogs"]) {
        if (!c.is_string()) throw Error(ErrorCode::InvalidArgument, "catalogs must be an array of ids");
        ids.push_back(c.get<std::string>());
      }
    } else {
      ids = catalog_ids();
    }
    std::vector<std::shared_ptr<const Catalog>> catalogs;
    for (const auto& id : ids) catalogs.push_back(load(id));
    AssumptionSet assumptions;
    if (req.contains("assumptions")) assumptions = assumptions_from_json(req["assumptions"].dump());

    SourceFile source{path.empty() ? "<session>" : path.string(), text, 1};
    auto st = analyze(std::move(source), ids, std::move(catalogs), std::move(assumptions), path);
    // Range checks on initial assumptions.
    (void)resolve(st->graph, st->assumptions);

    std::string id = "s" + std::to_string(next_id++);
    auto session = std::make_shared<Session>();
    session->state = st;
    {
      std::unique_lock lock(sessions_mutex);
      sessions[id] = session;
    }
    ordered_json out;
    out["session"] = id;
    out["version"] = st->version;
    out["catalogs"] = ids;
    out["graph"] = ordered_json::parse(graph_to_json(st->graph));
    out["catalogue"] = catalogue_of(*st);
    out["unresolved"] = resolve(st->graph, st->assumptions).unresolved();
    return with_version(json_response(201, out.dump(2) + "\n"), *st);
  }

  Response get_cost(const std::string& id, const std::multimap<std::string, std::string>& query) {
    auto st = session(id)->snapshot();
    int month = parse_month(query);
    std::size_t v = vendor_index(*st, query_value(query, "vendor"));
    CostReport r = monthly_cost(st->bound[v], st->assumptions, month);
    return with_version(json_response(200, report_to_json(r)), *st);
  }

  Response get_compare(const std::string& id, const std::multimap<std::string, std::string>& query) {
    auto st = session(id)->snapshot();
    int month = parse_month(query);
    if (st->catalogs.empty()) throw Error(ErrorCode::NotFound, "session has no catalogs");
    ordered_json out = ordered_json::parse(comparison_to_json(compare_catalogs(st->graph, st->assumptions,
                                                                               st->catalogs, month)));
    out["version"] = st->version;
    return with_version(json_response(200, out.dump(2) + "\n"), *st);
  }

  Response get_source(const std::string& id) {
    auto st = session(id)->snapshot();
    ordered_json out;
    out["version"] = st->version;
    out["text"] = st->source->text;
    out["annotations"] = ordered_json::array();
    for (const auto& a : dsl::read_annotations(st->tree)) {
      ordered_json entries = ordered_json::object();
      for (const auto& [k, v] : a.entries) {
        if (v.kind == dsl::Scalar::Kind::String) entries[k] = v.text;
        else entries[k] = v.literal();
      }
      out["annotations"].push_back(
          {{"target_span", span_json(a.target_span)}, {"wrapper_span", span_json(a.wrapper_span)}, {"entries", entries}});
    }
    return with_version(json_response(200, out.dump(2) + "\n"), *st);
  }

  Response get_graph(const std::string& id, const std::multimap<std::string, std::string>& query) {
    auto st = session(id)->snapshot();
    std::string format = query_value(query, "format");
    if (format == "dot") {
      Response r = json_response(200, graph_to_dot(st->graph));
      r.content_type = "text/vnd.graphviz";
      return with_version(r, *st);
    }
    if (!format.empty() && format != "json") throw Error(ErrorCode::InvalidArgument, "format must be json or dot");
    ordered_json out;
    out["version"] = st->version;
    out["graph"] = ordered_json::parse(graph_to_json(st->graph));
    return with_version(json_response(200, out.dump(2) + "\n"), *st);
  }

  Response get_assumptions(const std::string& id) {
    auto st = session(id)->snapshot();
    ordered_json out;
    out["version"] = st->version;
    out["catalogue"] = catalogue_of(*st);
    out["unresolved"] = resolve(st->graph, st->assumptions).unresolved();
    return with_version(json_response(200, out.dump(2) + "\n"), *st);
  }

  std::shared_ptr<State> reanalyze(const State& st, SourceFile source, AssumptionSet assumptions) {
    auto next = analyze(std::move(source), st.catalog_ids, st.catalogs, std::move(assumptions), st.path);
    if (!st.path.empty()) {
      std::ofstream out(st.path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + st.path.string());
      out << next->source->text;
    }
    return next;
  }

  Response patch_assumptions(const std::string& id, const std::string& body) {
    auto s = session(id);
    std::lock_guard write(s->write);
    auto st = s->snapshot();
    ordered_json req = parse_body(body);
    if (!req.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
    bool persist = false;
    if (req.contains("persist")) {
      if (!req["persist"].is_boolean()) throw Error(ErrorCode::InvalidArgument, "persist must be a boolean");
      persist = req["persist"].get<bool>();
    }
    std::vector<std::pair<std::string, Rational>> updates;
    for (const auto& [k, v] : req.items()) {
      if (k == "persist") continue;
      if (!st->graph.slot(k)) throw Error(ErrorCode::NotFound, "unknown assumption '" + k + "'").with_details({k});
      auto r = json_number(v);
      if (!r) throw Error(ErrorCode::InvalidArgument, "value for " + k + " must be a number").with_details({k});
      updates.emplace_back(k, *r);
    }
    if (updates.empty()) throw Error(ErrorCode::InvalidArgument, "no assumption given");

    AssumptionSet assumptions = st->assumptions;
    std::shared_ptr<State> next;
    if (persist) {
      SourceFile source = *st->source;
      for (const auto& [k, v] : updates) {
        // Spans move after each write; look the slot up in a fresh analysis.
        dsl::SyntaxTree tree = dsl::parse(source);
        CostGraph g = extract(tree);
        const AssumptionSlot* slot = g.slot(k);
        if (!slot) throw Error(ErrorCode::Internal, "assumption " + k + " vanished after rewrite");
        AssumptionSlot probe = *slot;
        probe.annotation = v;
        check_slot(probe, v);
        try {
          source = dsl::write_annotation(source, slot->anchor, {{slot->annotation_key, dsl::Scalar::of_number(v)}});
        } catch (const Error& e) {
          throw Error(ErrorCode::InvalidArgument, std::string("cannot persist ") + k + ": " + e.what())
              .with_details({k});
        }
        assumptions.overrides.erase(k);
      }
      source.version = st->version + 1;
      next = reanalyze(*st, std::move(source), std::move(assumptions));
    } else {
      for (const auto& [k, v] : updates) assumptions.overrides[k] = v;
      next = std::make_shared<State>(*st);
      next->assumptions = std::move(assumptions);
      next->version = st->version + 1;
      auto src = std::make_shared<SourceFile>(*st->source);
      src->version = next->version;
      next->source = src;
    }
    (void)resolve(next->graph, next->assumptions);
    s->publish(next);
    ordered_json out;
    out["version"] = next->version;
    out["catalogue"] = catalogue_of(*next);
    out["unresolved"] = resolve(next->graph, next->assumptions).unresolved();
    out["totals"] = totals_of(*next);
    return with_version(json_response(200, out.dump(2) + "\n"), *next);
  }

  static void check_slot(const AssumptionSlot& slot, const Rational& v) {
    CostGraph g;
    g.slots.push_back(slot);
    g.reindex();
    AssumptionSet a;
    a.overrides[slot.key] = v;
    (void)resolve(g, a);
  }

  Response black_box_link(const std::string& id, const std::string& body) {
    auto s = session(id);
    std::lock_guard write(s->write);
    auto st = s->snapshot();
    ordered_json req = parse_body(body);
    if (!req.is_object() || !req.contains("node") || !req["node"].is_string() || !req.contains("route") ||
        !req["route"].is_string())
      throw Error(ErrorCode::InvalidArgument, "body needs string fields node and route");
    std::string node_id = req["node"].get<std::string>();
    std::string route = req["route"].get<std::string>();
    const CostNode* node = st->graph.find(node_id);
    if (!node || node->node_class != NodeClass::ExternalHttpCall)
      throw Error(ErrorCode::NotFound, "'" + node_id + "' is not an external HTTP call");
    std::string path = route;
    std::string method;
    if (auto sp = route.find(' '); sp != std::string::npos) {
      method = route.substr(0, sp);
      path = route.substr(sp + 1);
    }
    for (auto& c : method) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<const CostNode*> targets;
    for (const auto& n : st->graph.nodes) {
      if (n.node_class != NodeClass::Endpoint || n.label != path) continue;
      if (!method.empty()) {
        // The registration verb is the method name of the registration call.
        std::string_view text = std::string_view(st->source->text).substr(n.span.start_byte, n.span.size());
        auto dot = text.find('.');
        auto paren = text.find('(');
        if (dot == std::string_view::npos || paren == std::string_view::npos || paren < dot) continue;
        std::string verb(text.substr(dot + 1, paren - dot - 1));
        if (verb != method) continue;
      }
      targets.push_back(&n);
    }
    if (targets.empty()) throw Error(ErrorCode::NotFound, "unknown route '" + route + "'");
    for (std::size_t ei : st->graph.out_edges(node_id))
      for (const CostNode* t : targets)
        if (st->graph.edges[ei].to == t->id)
          throw Error(ErrorCode::Conflict, "'" + node_id + "' is already linked to " + route);

    // Existing links live in the callsEndpoint annotation around the call.
    std::string links = route;
    for (const auto& a : dsl::read_annotations(st->tree)) {
      if (!a.target_span.same_range(node->span)) continue;
      if (const dsl::Scalar* v = dsl::find_entry(a.entries, "callsEndpoint"); v && !v->text.empty())
        links = v->text + ", " + route;
    }
    SourceFile source = dsl::write_annotation(*st->source, node->span,
                                              {{"callsEndpoint", dsl::Scalar::of_string(links)}});
    source.version = st->version + 1;
    auto next = reanalyze(*st, std::move(source), st->assumptions);
    s->publish(next);
    ordered_json out;
    out["version"] = next->version;
    out["graph"] = ordered_json::parse(graph_to_json(next->graph));
    out["catalogue"] = catalogue_of(*next);
    out["unresolved"] = resolve(next->graph, next->assumptions).unresolved();
    return with_version(json_response(200, out.dump(2) + "\n"), *next);
  }

  Response route(const std::string& method, const std::string& path,
                 const std::multimap<std::string, std::string>& query, const std::string& body) {
    static const std::regex session_re("^/sessions/([A-Za-z0-9_-]+)(/[a-z-]+)?$");
    if (path == "/catalogs") {
      if (method != "GET") return error_response(ErrorCode::NotFound, "method not allowed");
      return get_catalogs();
    }
    if (path == "/sessions") {
      if (method != "POST") return error_response(ErrorCode::NotFound, "method not allowed");
      return create_session(body);
    }
    std::smatch m;
    if (!std::regex_match(path, m, session_re)) return error_response(ErrorCode::NotFound, "no route " + path);
    std::string id = m[1];
    std::string sub = m[2];
    if (method == "GET") {
      if (sub == "/cost") return get_cost(id, query);
      if (sub == "/compare") return get_compare(id, query);
      if (sub == "/source") return get_source(id);
      if (sub == "/graph") return get_graph(id, query);
      if (sub == "/assumptions") return get_assumptions(id);
    } else if (method == "PATCH" && sub == "/assumptions") {
      return patch_assumptions(id, body);
    } else if (method == "POST" && sub == "/black-box-link") {
      return black_box_link(id, body);
    }
    return error_response(ErrorCode::NotFound, "no route " + method + " " + path);
  }

  void add_cors(Response& r) {
    if (config.ui_origin.empty()) return;
    r.headers["Access-Control-Allow-Origin"] = config.ui_origin;
    r.headers["Access-Control-Expose-Headers"] = kVersionHeader;
    r.headers["Vary"] = "Origin";
  }
};

Service::Service(Config config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::multimap<std::string, std::string> query(req.params.begin(), req.params.end());
    Response r = handle(req.method, req.path, query, req.body);
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, r.content_type);
  };
  auto& srv = impl_->server;
  srv.Get(".*", handler);
  srv.Post(".*", handler);
  srv.Patch(".*", handler);
  srv.Options(".*", handler);
}

Service::~Service() { stop(); }

Response Service::handle(const std::string& method, const std::string& path,
                         const std::multimap<std::string, std::string>& query, const std::string& body) {
  Response r;
  if (method == "OPTIONS") {
    r.status = 204;
    r.content_type = "text/plain";
    if (!impl_->config.ui_origin.empty()) {
      r.headers["Access-Control-Allow-Methods"] = "GET, POST, PATCH, OPTIONS";
      r.headers["Access-Control-Allow-Headers"] = "Content-Type";
    }
  } else {
    try {
      r = impl_->route(method, path, query, body);
    } catch (const Error& e) {
      r = error_response(e);
    } catch (const std::exception& e) {
      r = error_response(ErrorCode::Internal, e.what());
    }
  }
  impl_->add_cors(r);
  return r;
}

bool Service::listen() {
  impl_->running = true;
  bool ok = impl_->server.listen(impl_->config.host, impl_->config.port);
  impl_->running = false;
  return ok;
}

int Service::bind_ephemeral() {
  int port = impl_->server.bind_to_any_port(impl_->config.host);
  return port < 0 ? 0 : port;
}

bool Service::listen_after_bind() {
  impl_->running = true;
  bool ok = impl_->server.listen_after_bind();
  impl_->running = false;
  return ok;
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

std::pair<std::string, int> parse_listen(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size())
    throw Error(ErrorCode::InvalidArgument, "listen address must be host:port, got '" + text + "'");
  std::string host = text.substr(0, colon);
  std::string port = text.substr(colon + 1);
  if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; }) || port.size() > 5)
    throw Error(ErrorCode::InvalidArgument, "port must be a number, got '" + port + "'");
  int p = std::stoi(port);
  if (p > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range: " + port);
  if (host.empty()) host = "127.0.0.1";
  return {host, p};
}

}  // namespace penny::service
