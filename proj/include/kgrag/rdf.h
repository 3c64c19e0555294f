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

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kgrag::rdf {

/// Absolute IRI. Construction validates the RDF IRIREF character rules and
/// the presence of a scheme.
class Iri {
 public:
  explicit Iri(std::string value);
  const std::string& str() const noexcept { return value_; }
  auto operator<=>(const Iri&) const = default;

  static bool is_valid(std::string_view value) noexcept;

 private:
  std::string value_;
};

struct Literal {
  std::string lexical;
  std::string datatype;  // empty means xsd:string
  std::string language;  // empty unless a language tag was set

  auto operator<=>(const Literal&) const = default;
};

using Term = std::variant<Iri, Literal>;

struct Triple {
  Iri subject;
  Iri predicate;
  Term object;

  auto operator<=>(const Triple&) const = default;
};

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kRdfsLabel = "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr std::string_view kProvWasDerivedFrom = "http://www.w3.org/ns/prov#wasDerivedFrom";

/// Escapes a literal body for N-Triples / SPARQL: \" \\ \n \r \t; other
/// control characters as \uXXXX.
std::string escape_string(std::string_view s);

std::string to_ntriples_term(const Term& term);
std::string to_ntriples_line(const Triple& triple);  // without the trailing newline

class NTriplesError : public std::runtime_error {
 public:
  NTriplesError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses N-Triples (no blank nodes). Comments and blank lines are skipped.
std::vector<Triple> parse_ntriples(std::string_view text);

}  // namespace kgrag::rdf
