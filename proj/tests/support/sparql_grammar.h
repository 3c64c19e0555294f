// Copyright 2026 the kgrag authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace kgrag::testing {

struct SparqlCheck {
  bool ok = false;
  std::string error;
  std::size_t offset = 0;
  std::size_t triples = 0;  // ground triples in all data blocks
};

/// Recognizer for the ground-data part of the SPARQL 1.1 Update grammar:
/// Prologue, then INSERT DATA / DELETE DATA operations separated by ';', with
/// QuadData built from IRIs, prefixed names, 'a', literals (all string forms,
/// language tags, datatypes, numbers, booleans), blank node labels, GRAPH
/// blocks and predicate/object lists. Variables are rejected, as the grammar
/// requires for data blocks; collections and bracketed blank nodes are
/// reported as unsupported.
SparqlCheck check_sparql_update(std::string_view text);

}  // namespace kgrag::testing
