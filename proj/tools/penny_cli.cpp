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
// penny: command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "penny/penny.h"

namespace {

using nlohmann::ordered_json;

enum Exit { kOk = 0, kFailure = 1, kUnresolved = 2 };

struct Options {
  std::string file;
  std::vector<std::string> catalogs;
  int month = 1;
  std::vector<std::string> assume;
  std::string assumptions_file;
  bool json = false;
  bool strict = false;
  std::string format = "json";
  std::uint64_t seed = 1;
  std::string entry;
};

int report_error(penny_status status, bool json) {
  std::string diag = penny_last_error();
  if (json) {
    std::cerr << diag << "\n";
  } else {
    auto j = ordered_json::parse(diag, nullptr, false);
    std::cerr << "error: " << penny_status_name(status);
    if (!j.is_discarded()) {
      std::cerr << ": " << j.value("message", "");
      if (j.contains("span"))
        std::cerr << " (line " << j["span"]["start_line"] << ", col " << j["span"]["start_col"] << ")";
      if (j.contains("details") && status == PENNY_E_UNRESOLVED_ASSUMPTION) {
        std::cerr << "\nprovide values with --assume, e.g.";
        for (const auto& k : j["details"]) std::cerr << "\n  --assume " << k.get<std::string>() << "=<value>";
      }
    }
    std::cerr << "\n";
  }
  return status == PENNY_E_UNRESOLVED_ASSUMPTION ? kUnresolved : kFailure;
}

void warn(const std::string& code, const std::string& message, bool json) {
  if (json) {
    std::cerr << ordered_json{{"code", code}, {"message", message}, {"severity", "warning"}}.dump() << "\n";
  } else {
    std::cerr << "warning: " << code << ": " << message << "\n";
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  penny_string_free(s);
  return out;
}

struct Program {
  penny_program* p = nullptr;
  ~Program() { penny_program_free(p); }
};

struct Catalogs {
  std::vector<penny_catalog*> list;
  ~Catalogs() {
    for (auto* c : list) penny_catalog_free(c);
  }
};

// Accepts a path, or a catalog id looked up in PENNY_CATALOG_DIR.
std::string catalog_path(const std::string& arg) {
  if (arg.find('/') != std::string::npos || (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json")) return arg;
  const char* dir = std::getenv("PENNY_CATALOG_DIR");
  return std::string(dir ? dir : "catalogs") + "/" + arg + ".json";
}

// Loads the program and applies assumptions; returns an exit code on failure.
int open_program(const Options& o, Program& prog) {
  penny_status st = penny_program_open(o.file.c_str(), &prog.p);
  if (st != PENNY_OK) return report_error(st, o.json);
  if (!o.assumptions_file.empty()) {
    std::FILE* f = std::fopen(o.assumptions_file.c_str(), "rb");
    if (!f) {
      warn("Io", "cannot read " + o.assumptions_file, o.json);
      return kFailure;
    }
    std::string text;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, n);
    std::fclose(f);
    st = penny_program_assume_json(prog.p, text.c_str());
    if (st != PENNY_OK) return report_error(st, o.json);
  }
  for (const auto& a : o.assume) {
    auto eq = a.find('=');
    if (eq == std::string::npos) {
      warn("InvalidArgument", "--assume expects key=value, got '" + a + "'", o.json);
      return kFailure;
    }
    st = penny_program_assume(prog.p, a.substr(0, eq).c_str(), a.substr(eq + 1).c_str());
    if (st != PENNY_OK) return report_error(st, o.json);
  }
  char* out = nullptr;
  penny_program_unknown_keys(prog.p, &out);
  auto unknown = ordered_json::parse(take(out));
  for (const auto& k : unknown) warn("UnknownAssumption", "no assumption named " + k.get<std::string>(), o.json);
  if (o.strict && !unknown.empty()) return kFailure;
  penny_program_findings(prog.p, &out);
  auto findings = ordered_json::parse(take(out));
  for (const auto& f : findings)
    warn(f["code"], f["subject"].get<std::string>() + ": " + f["message"].get<std::string>(), o.json);
  if (o.strict && !findings.empty()) return kFailure;
  return kOk;
}

int load_catalogs(const Options& o, Catalogs& cats) {
  if (o.catalogs.empty()) {
    warn("InvalidArgument", "--catalog is required", o.json);
    return kFailure;
  }
  for (const auto& c : o.catalogs) {
    penny_catalog* cat = nullptr;
    penny_status st = penny_catalog_load(catalog_path(c).c_str(), &cat);
    if (st != PENNY_OK) return report_error(st, o.json);
    cats.list.push_back(cat);
  }
  return kOk;
}

void print_report(const ordered_json& r) {
  std::printf("%s %s, month %d (%s)\n", r["vendor"].get<std::string>().c_str(),
              r["catalog_version"].get<std::string>().c_str(), r["month"].get<int>(),
              r["mode"].get<std::string>().c_str());
  std::printf("%-16s %-14s %-36s %22s %16s\n", "node", "count", "factor", "quantity", "cost");
  for (const auto& n : r["nodes"]) {
    bool first = true;
    for (const auto& f : n["factors"]) {
      std::printf("%-16s %-14s %-36s %22s %16s\n", first ? n["label"].get<std::string>().c_str() : "",
                  first ? n["count"].get<std::string>().c_str() : "", f["id"].get<std::string>().c_str(),
                  (f["quantity"].get<std::string>() + " " + f["unit"].get<std::string>()).c_str(),
                  f["display"].get<std::string>().c_str());
      first = false;
    }
    if (first)
      std::printf("%-16s %-14s %-36s %22s %16s\n", n["label"].get<std::string>().c_str(),
                  n["count"].get<std::string>().c_str(), "-", "", "$0.000000");
  }
  std::printf("%-16s %108s\n", "total", r["total_display"].get<std::string>().c_str());
}

int cmd_analyze(const Options& o) {
  Program prog;
  if (int rc = open_program(o, prog)) return rc;
  char* out = nullptr;
  penny_status st = penny_program_graph(prog.p, o.format == "dot", &out);
  if (st != PENNY_OK) return report_error(st, o.json);
  std::cout << take(out);
  return kOk;
}

int cmd_cost(const Options& o) {
  Program prog;
  Catalogs cats;
  if (int rc = open_program(o, prog)) return rc;
  if (int rc = load_catalogs(o, cats)) return rc;
  char* out = nullptr;
  penny_status st = penny_cost(prog.p, cats.list.front(), o.month, &out);
  if (st != PENNY_OK) return report_error(st, o.json);
  std::string report = take(out);
  if (o.json) std::cout << report;
  else print_report(ordered_json::parse(report));
  return kOk;
}

int cmd_compare(const Options& o) {
  Program prog;
  Catalogs cats;
  if (int rc = open_program(o, prog)) return rc;
  if (int rc = load_catalogs(o, cats)) return rc;
  char* out = nullptr;
  penny_status st = penny_compare(prog.p, cats.list.data(), cats.list.size(), o.month, &out);
  if (st != PENNY_OK) return report_error(st, o.json);
  std::string text = take(out);
  if (o.json) {
    std::cout << text;
    return kOk;
  }
  auto j = ordered_json::parse(text);
  std::printf("month %d, deltas relative to %s\n", j["month"].get<int>(), j["baseline"].get<std::string>().c_str());
  for (const auto& v : j["vendors"]) {
    std::printf("%-12s %16s  delta %+.6f USD\n", v["vendor"].get<std::string>().c_str(),
                v["total_display"].get<std::string>().c_str(), v["delta_micro"].get<double>() / 1e6);
    for (const auto& n : v["nodes"])
      if (n["delta_micro"].get<long long>() != 0)
        std::printf("    %-20s %+.6f USD\n", n["label"].get<std::string>().c_str(),
                    n["delta_micro"].get<double>() / 1e6);
  }
  return kOk;
}

int cmd_simulate(const Options& o) {
  Program prog;
  Catalogs cats;
  if (int rc = open_program(o, prog)) return rc;
  if (int rc = load_catalogs(o, cats)) return rc;
  char* sim = nullptr;
  char* ana = nullptr;
  penny_status st = penny_simulate(prog.p, cats.list.front(), o.month, o.seed, &sim);
  if (st != PENNY_OK) return report_error(st, o.json);
  st = penny_cost(prog.p, cats.list.front(), o.month, &ana);
  if (st != PENNY_OK) return report_error(st, o.json);
  auto s = ordered_json::parse(take(sim));
  auto a = ordered_json::parse(take(ana));
  ordered_json diff = ordered_json::array();
  long long worst = 0;
  for (std::size_t i = 0; i < a["nodes"].size(); ++i) {
    const auto& an = a["nodes"][i];
    const auto& sn = s["nodes"][i];
    for (std::size_t k = 0; k < an["factors"].size(); ++k) {
      long long av = an["factors"][k]["amount_micro"];
      long long sv = sn["factors"][k]["amount_micro"];
      diff.push_back({{"factor", an["factors"][k]["id"]},
                      {"analytic_micro", av},
                      {"simulated_micro", sv},
                      {"delta_micro", sv - av}});
      worst = std::max(worst, std::llabs(sv - av));
    }
  }
  if (o.json) {
    ordered_json out;
    out["simulated"] = s;
    out["diff"] = diff;
    out["max_abs_delta_micro"] = worst;
    std::cout << out.dump(2) << "\n";
    return kOk;
  }
  print_report(s);
  std::printf("\n%-36s %16s %16s %12s\n", "factor", "analytic", "simulated", "delta");
  for (const auto& d : diff)
    std::printf("%-36s %16lld %16lld %12lld\n", d["factor"].get<std::string>().c_str(),
                d["analytic_micro"].get<long long>(), d["simulated_micro"].get<long long>(),
                d["delta_micro"].get<long long>());
  std::printf("max |delta| = %lld micro-USD\n", worst);
  return kOk;
}

int cmd_invocation(const Options& o) {
  Program prog;
  Catalogs cats;
  if (int rc = open_program(o, prog)) return rc;
  if (int rc = load_catalogs(o, cats)) return rc;
  char* out = nullptr;
  penny_status st = penny_invocation_cost(prog.p, cats.list.front(), o.entry.c_str(), &out);
  if (st != PENNY_OK) return report_error(st, o.json);
  std::cout << take(out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penny: cost estimates for cloud programs"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("file", o.file, "source file")->required();
    sub->add_option("--assume", o.assume, "assumption override key=value");
    sub->add_option("--assumptions", o.assumptions_file, "JSON file of assumption overrides");
    sub->add_flag("--json", o.json, "JSON output and JSON-lines diagnostics");
    sub->add_flag("--strict", o.strict, "treat unknown keys and graph findings as errors");
  };

  auto* analyze = app.add_subcommand("analyze", "print the cost graph");
  common(analyze);
  analyze->add_option("--format", o.format, "json or dot")->check(CLI::IsMember({"json", "dot"}));

  auto* cost = app.add_subcommand("cost", "monthly cost report");
  common(cost);
  cost->add_option("--catalog", o.catalogs, "catalog path or id")->expected(1);
  cost->add_option("--month", o.month, "month index, >= 1");

  auto* compare = app.add_subcommand("compare", "compare catalogs");
  common(compare);
  compare->add_option("--catalog", o.catalogs, "catalog path or id (repeatable)");
  compare->add_option("--month", o.month, "month index, >= 1");

  auto* simulate = app.add_subcommand("simulate", "event simulation and diff against the analytic report");
  common(simulate);
  simulate->add_option("--catalog", o.catalogs, "catalog path or id")->expected(1);
  simulate->add_option("--month", o.month, "month index, >= 1");
  simulate->add_option("--seed", o.seed, "tie-break seed");

  auto* invocation = app.add_subcommand("invocation", "cost of one invocation of an entry point");
  common(invocation);
  invocation->add_option("--catalog", o.catalogs, "catalog path or id")->expected(1);
  invocation->add_option("--entry", o.entry, "entry node id")->required();

  std::string listen;
  std::string catalog_dir;
  std::string ui_origin;
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--listen", listen, "host:port")->envname("PENNY_LISTEN")->default_val("127.0.0.1:8080");
  serve->add_option("--catalog-dir", catalog_dir, "catalog directory")
      ->envname("PENNY_CATALOG_DIR")
      ->default_val("catalogs");
  serve->add_option("--ui-origin", ui_origin, "allowed CORS origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFailure;
  }

  if (*analyze) return cmd_analyze(o);
  if (*cost) return cmd_cost(o);
  if (*compare) return cmd_compare(o);
  if (*simulate) return cmd_simulate(o);
  if (*invocation) return cmd_invocation(o);
  if (*serve) {
    std::cerr << "listening on " << listen << "\n";
    penny_status st = penny_serve(listen.c_str(), catalog_dir.c_str(), ui_origin.empty() ? nullptr : ui_origin.c_str());
    if (st != PENNY_OK) return report_error(st, false);
  }
  return kOk;
}
