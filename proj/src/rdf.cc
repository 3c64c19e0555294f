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

#include "kgrag/rdf.h"

#include <cstdio>

#include "kgrag/text_util.h"

namespace kgrag::rdf {
namespace {

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class LineReader {
 public:
  LineReader(std::string_view s, std::size_t lineno) : s_(s), line_(lineno) {}

  [[noreturn]] void fail(const std::string& msg) const { throw NTriplesError(line_, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }

  Iri iri() {
    if (peek() != '<') fail("expected '<'");
    ++pos_;
    std::string value;
    while (!at_end() && s_[pos_] != '>') {
      if (s_[pos_] == '\\') {
        ++pos_;
        value_append_uchar(value);
        continue;
      }
      value.push_back(s_[pos_++]);
    }
    if (at_end()) fail("unterminated IRI");
    ++pos_;
    if (!Iri::is_valid(value)) fail("invalid IRI <" + value + ">");
    return Iri(std::move(value));
  }

  Literal literal() {
    if (peek() != '"') fail("expected '\"'");
    ++pos_;
    Literal lit;
    while (!at_end() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c != '\\') {
        lit.lexical.push_back(c);
        continue;
      }
      if (at_end()) fail("dangling escape");
      char e = s_[pos_];
      switch (e) {
        case 't': lit.lexical.push_back('\t'); ++pos_; break;
        case 'b': lit.lexical.push_back('\b'); ++pos_; break;
        case 'n': lit.lexical.push_back('\n'); ++pos_; break;
        case 'r': lit.lexical.push_back('\r'); ++pos_; break;
        case 'f': lit.lexical.push_back('\f'); ++pos_; break;
        case '"': case '\'': case '\\': lit.lexical.push_back(e); ++pos_; break;
        case 'u': case 'U': value_append_uchar(lit.lexical); break;
        default: fail(std::string("invalid escape \\") + e);
      }
    }
    if (at_end()) fail("unterminated literal");
    ++pos_;
    if (peek() == '@') {
      ++pos_;
      while (!at_end() && (text::is_alpha(peek()) || text::is_digit(peek()) || peek() == '-')) lit.language.push_back(s_[pos_++]);
      if (lit.language.empty()) fail("empty language tag");
    } else if (s_.substr(pos_, 2) == "^^") {
      pos_ += 2;
      lit.datatype = iri().str();
    }
    return lit;
  }

  void expect_end() {
    skip_ws();
    if (peek() != '.') fail("expected '.'");
    ++pos_;
    skip_ws();
    if (!at_end() && peek() != '#') fail("trailing content after '.'");
  }

 private:
  void value_append_uchar(std::string& out) {
    if (at_end()) fail("dangling escape");
    char kind = s_[pos_++];
    std::size_t digits = kind == 'u' ? 4 : kind == 'U' ? 8 : 0;
    if (digits == 0 || pos_ + digits > s_.size()) fail("invalid unicode escape");
    unsigned long cp = 0;
    for (std::size_t i = 0; i < digits; ++i) {
      char h = s_[pos_++];
      int v = text::is_digit(h) ? h - '0' : (h >= 'a' && h <= 'f') ? h - 'a' + 10 : (h >= 'A' && h <= 'F') ? h - 'A' + 10 : -1;
      if (v < 0) fail("invalid hex digit in unicode escape");
      cp = cp * 16 + static_cast<unsigned long>(v);
    }
    if (cp > 0x10FFFF) fail("code point out of range");
    append_utf8(out, cp);
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

Iri::Iri(std::string value) : value_(std::move(value)) {
  if (!is_valid(value_)) throw std::invalid_argument("invalid IRI: " + value_);
}

bool Iri::is_valid(std::string_view v) noexcept {
  std::size_t colon = v.find(':');
  if (colon == std::string_view::npos || colon == 0 || !text::is_alpha(v[0])) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    char c = v[i];
    if (!(text::is_alpha(c) || text::is_digit(c) || c == '+' || c == '-' || c == '.')) return false;
  }
  for (char c : v) {
    if (static_cast<unsigned char>(c) <= 0x20) return false;
    if (std::string_view("<>\"{}|^`\\").find(c) != std::string_view::npos) return false;
  }
  return true;
}

std::string escape_string(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04X", static_cast<unsigned>(static_cast<unsigned char>(c)));
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  return out;
}

std::string to_ntriples_term(const Term& term) {
  if (const auto* iri = std::get_if<Iri>(&term)) return "<" + iri->str() + ">";
  const auto& lit = std::get<Literal>(term);
  std::string out = "\"" + escape_string(lit.lexical) + "\"";
  if (!lit.language.empty()) {
    out += "@" + lit.language;
  } else if (!lit.datatype.empty()) {
    out += "^^<" + lit.datatype + ">";
  }
  return out;
}

std::string to_ntriples_line(const Triple& t) {
  return "<" + t.subject.str() + "> <" + t.predicate.str() + "> " + to_ntriples_term(t.object) + " .";
}

NTriplesError::NTriplesError(std::size_t line, const std::string& message)
    : std::runtime_error("N-Triples line " + std::to_string(line) + ": " + message), line_(line) {}

std::vector<Triple> parse_ntriples(std::string_view content) {
  std::vector<Triple> out;
  std::size_t lineno = 0;
  for (std::string_view raw : text::split_lines(content)) {
    ++lineno;
    std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    LineReader r(line, lineno);
    if (r.peek() == '_') r.fail("blank nodes are not supported");
    Iri s = r.iri();
    r.skip_ws();
    Iri p = r.iri();
    r.skip_ws();
    Term o = r.peek() == '<' ? Term(r.iri()) : r.peek() == '"' ? Term(r.literal()) : (r.fail("expected object"), Term(s));
    r.expect_end();
    out.push_back({std::move(s), std::move(p), std::move(o)});
  }
  return out;
}

}  // namespace kgrag::rdf
