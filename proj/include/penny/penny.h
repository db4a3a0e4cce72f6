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
#ifndef PENNY_PENNY_H
#define PENNY_PENNY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PENNY_API __declspec(dllexport)
#else
#define PENNY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returns PENNY_OK or one of the error codes;
   penny_last_error() then holds a one-line JSON diagnostic for this thread. */
typedef enum penny_status {
  PENNY_OK = 0,
  PENNY_E_PARSE = 1,
  PENNY_E_SPAN_OUT_OF_RANGE,
  PENNY_E_MALFORMED_ANNOTATION,
  PENNY_E_TARGET_NOT_AN_EXPRESSION,
  PENNY_E_UNSUPPORTED_RESOURCE,
  PENNY_E_UNSUPPORTED_METHOD,
  PENNY_E_UNSUPPORTED_CONSTRUCT,
  PENNY_E_UNRESOLVED_RECEIVER,
  PENNY_E_DANGLING_TRIGGER,
  PENNY_E_UNKNOWN_ROUTE,
  PENNY_E_PHASE_MISMATCH,
  PENNY_E_NO_ENTRY_POINTS,
  PENNY_E_NOT_AN_ENTRY_POINT,
  PENNY_E_CATALOG_PARSE,
  PENNY_E_DUPLICATE_RULE,
  PENNY_E_NON_INCREASING_TIERS,
  PENNY_E_INVALID_RULE,
  PENNY_E_NEGATIVE_QUANTITY,
  PENNY_E_UNPRICED_FACTOR,
  PENNY_E_CYCLE_DETECTED,
  PENNY_E_UNRESOLVED_ASSUMPTION,
  PENNY_E_UNKNOWN_ASSUMPTION,
  PENNY_E_INVALID_ASSUMPTION,
  PENNY_E_INVALID_ARGUMENT,
  PENNY_E_NOT_FOUND,
  PENNY_E_CONFLICT,
  PENNY_E_IO,
  PENNY_E_OVERFLOW,
  PENNY_E_INTERNAL
} penny_status;

typedef struct penny_program penny_program; /* parsed + extracted source with assumptions */
typedef struct penny_catalog penny_catalog;

PENNY_API const char* penny_status_name(penny_status status);
/* JSON diagnostic of the last failure on this thread, "" after success. */
PENNY_API const char* penny_last_error(void);
/* Frees strings returned through char** out parameters. */
PENNY_API void penny_string_free(char* s);

PENNY_API penny_status penny_program_open(const char* path, penny_program** out);
PENNY_API penny_status penny_program_from_source(const char* name, const char* text, penny_program** out);
PENNY_API void penny_program_free(penny_program* program);

/* value: decimal or "p/q" text */
PENNY_API penny_status penny_program_assume(penny_program* program, const char* key, const char* value);
/* {"key": number, ...} */
PENNY_API penny_status penny_program_assume_json(penny_program* program, const char* json);
/* JSON array of override keys that name no assumption slot. */
PENNY_API penny_status penny_program_unknown_keys(const penny_program* program, char** out);
/* JSON array of validation findings. */
PENNY_API penny_status penny_program_findings(const penny_program* program, char** out);
/* dot != 0 selects Graphviz output. */
PENNY_API penny_status penny_program_graph(const penny_program* program, int dot, char** out);
PENNY_API penny_status penny_program_catalogue(const penny_program* program, char** out);

PENNY_API penny_status penny_catalog_load(const char* path, penny_catalog** out);
PENNY_API void penny_catalog_free(penny_catalog* catalog);

PENNY_API penny_status penny_cost(const penny_program* program, const penny_catalog* catalog, int month,
                                  char** out);
PENNY_API penny_status penny_compare(const penny_program* program, const penny_catalog* const* catalogs,
                                     size_t count, int month, char** out);
PENNY_API penny_status penny_simulate(const penny_program* program, const penny_catalog* catalog, int month,
                                      uint64_t seed, char** out);
PENNY_API penny_status penny_invocation_cost(const penny_program* program, const penny_catalog* catalog,
                                             const char* entry, char** out);

/* Blocks serving the HTTP API. listen is "host:port". */
PENNY_API penny_status penny_serve(const char* listen, const char* catalog_dir, const char* ui_origin);

#ifdef __cplusplus
}
#endif

#endif /* PENNY_PENNY_H */
