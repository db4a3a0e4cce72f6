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
#include <json.hpp>

#include "penny/error.hpp"

namespace penny {

std::string diagnostic_json(const Error& e) {
  nlohmann::ordered_json j;
  j["code"] = to_string(e.code());
  j["message"] = e.what();
  if (e.span()) {
    const Span& s = *e.span();
    j["span"] = {{"start_byte", s.start_byte}, {"end_byte", s.end_byte}, {"start_line", s.start_line},
                 {"start_col", s.start_col},   {"end_line", s.end_line}, {"end_col", s.end_col}};
  }
  if (!e.details().empty()) j["details"] = e.details();
  if (!e.expected().empty()) j["expected"] = e.expected();
  if (!e.found().empty()) j["found"] = e.found();
  return j.dump();
}

}  // namespace penny
