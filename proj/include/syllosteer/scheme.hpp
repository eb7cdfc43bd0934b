#pragma once

// The scheme catalog: parsing of the plain-text catalog format and the
// operations that certify conclusions against a scheme's premises.
//
// Catalog layout, one block per scheme:
//
//   Schema: AA1
//   Premise 1: All <A> are <B> / Premise 2: All <B> are <C>
//   Conclusions: All <A> are <C> | some <A> are <C> | some <C> are <A>
//
// Conclusion lists may wrap onto following lines until a blank line or the
// next block.

#include <random>
#include <string>
#include <vector>

#include "syllosteer/logic.hpp"

namespace syllosteer {

struct Scheme {
  std::string id;
  Statement premise1;
  Statement premise2;
  std::vector<Statement> valid_conclusions;

  Syllogism with_conclusion(const Statement& c) const { return {premise1, premise2, c}; }
};

namespace detail {

inline Slot parse_slot_token(const std::string& tok, int line_no) {
  if (tok == "<A>") return Slot::A;
  if (tok == "<B>") return Slot::B;
  if (tok == "<C>") return Slot::C;
  throw DataError("line " + std::to_string(line_no) + ": expected term slot <A>/<B>/<C>, got '" +
                  tok + "'");
}

// Parses "All <A> are <B>" / "No ..." / "Some ..." / "Some ... are not ...".
inline Statement parse_statement_template(const std::string& text, int line_no) {
  std::vector<std::string> words;
  for (auto& w : split(trim(text), ' '))
    if (!w.empty()) words.push_back(w);
  if (words.size() < 4)
    throw DataError("line " + std::to_string(line_no) + ": malformed statement '" + text + "'");

  Quantifier q;
  const std::string head = to_lower(words[0]);
  if (head == "all") q = Quantifier::All;
  else if (head == "no") q = Quantifier::No;
  else if (head == "some") q = Quantifier::Some;
  else
    throw DataError("line " + std::to_string(line_no) + ": unknown quantifier phrasing '" +
                    words[0] + "'");

  if (to_lower(words[2]) != "are")
    throw DataError("line " + std::to_string(line_no) + ": malformed statement '" + text + "'");

  Slot subject = parse_slot_token(words[1], line_no);
  Slot predicate;
  if (q == Quantifier::Some && words.size() == 5 && to_lower(words[3]) == "not") {
    q = Quantifier::SomeNot;
    predicate = parse_slot_token(words[4], line_no);
  } else if (words.size() == 4) {
    predicate = parse_slot_token(words[3], line_no);
  } else {
    throw DataError("line " + std::to_string(line_no) + ": malformed statement '" + text + "'");
  }
  if (subject == predicate)
    throw DataError("line " + std::to_string(line_no) + ": subject and predicate slots coincide");
  return {q, subject, predicate};
}

}  // namespace detail

inline std::vector<Scheme> parse_scheme_catalog(const std::string& catalog_text) {
  std::vector<Scheme> schemes;
  const auto lines = split(catalog_text, '\n');

  std::size_t i = 0;
  auto line_no = [&] { return static_cast<int>(i) + 1; };
  while (i < lines.size()) {
    std::string line = trim(lines[i]);
    if (line.empty()) {
      ++i;
      continue;
    }
    if (!starts_with_ci(line, "Schema:"))
      throw DataError("line " + std::to_string(line_no()) + ": expected 'Schema:', got '" + line +
                      "'");
    Scheme scheme;
    scheme.id = trim(line.substr(7));
    if (scheme.id.empty())
      throw DataError("line " + std::to_string(line_no()) + ": missing scheme id");
    for (const auto& existing : schemes)
      if (existing.id == scheme.id)
        throw DataError("line " + std::to_string(line_no()) + ": duplicate scheme id '" +
                        scheme.id + "'");
    ++i;

    if (i >= lines.size() || !starts_with_ci(trim(lines[i]), "Premise 1:"))
      throw DataError("line " + std::to_string(line_no()) + ": expected 'Premise 1:' line");
    {
      const std::string prem = trim(lines[i]);
      const std::size_t sep = prem.find('/');
      if (sep == std::string::npos)
        throw DataError("line " + std::to_string(line_no()) +
                        ": expected 'Premise 1: ... / Premise 2: ...'");
      std::string p1 = trim(prem.substr(0, sep));
      std::string p2 = trim(prem.substr(sep + 1));
      if (!starts_with_ci(p1, "Premise 1:") || !starts_with_ci(p2, "Premise 2:"))
        throw DataError("line " + std::to_string(line_no()) + ": malformed premise line");
      scheme.premise1 = detail::parse_statement_template(p1.substr(10), line_no());
      scheme.premise2 = detail::parse_statement_template(p2.substr(10), line_no());
    }
    ++i;

    if (i >= lines.size() || !starts_with_ci(trim(lines[i]), "Conclusions:"))
      throw DataError("line " + std::to_string(line_no()) + ": expected 'Conclusions:' line");
    std::string conclusion_text = trim(lines[i]).substr(12);
    ++i;
    // wrapped conclusion lines
    while (i < lines.size()) {
      std::string cont = trim(lines[i]);
      if (cont.empty() || starts_with_ci(cont, "Schema:")) break;
      conclusion_text += " " + cont;
      ++i;
    }
    for (const auto& part : split(conclusion_text, '|')) {
      std::string item = trim(part);
      if (item.empty())
        throw DataError("line " + std::to_string(line_no()) + ": empty conclusion entry");
      scheme.valid_conclusions.push_back(detail::parse_statement_template(item, line_no()));
    }
    if (scheme.valid_conclusions.empty())
      throw DataError("scheme " + scheme.id + " lists no conclusions");
    schemes.push_back(std::move(scheme));
  }

  if (schemes.empty()) throw DataError("no schemes found");
  return schemes;
}

inline std::vector<Scheme> load_scheme_catalog(const std::filesystem::path& path) {
  return parse_scheme_catalog(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Certification against a scheme's premises
// ---------------------------------------------------------------------------

// Candidate conclusions certified INVALID by the oracle. Every scheme admits
// a non-empty set (among the 24 quantifier x term-order candidates).
inline std::vector<Statement> certified_invalid_conclusions(const Scheme& scheme,
                                                            bool existential_import = true) {
  std::vector<Statement> out;
  for (const Statement& cand : candidate_conclusions()) {
    if (check_validity(scheme.with_conclusion(cand), existential_import).label ==
        Validity::Invalid)
      out.push_back(cand);
  }
  return out;
}

// Uniform draw from the certified-invalid candidate set; deterministic per rng
// state. Candidate order is the fixed candidate_conclusions() order.
inline Statement generate_invalid_conclusion(const Scheme& scheme, std::mt19937_64& rng,
                                             bool existential_import = true) {
  const auto invalid = certified_invalid_conclusions(scheme, existential_import);
  if (invalid.empty())
    throw DataError("scheme " + scheme.id + " admits no invalid candidate conclusions");
  std::uniform_int_distribution<std::size_t> pick(0, invalid.size() - 1);
  return invalid[pick(rng)];
}

// Catalog soundness: every listed conclusion is VALID under existential import.
// Returns the (scheme id, conclusion index) pairs that fail, empty when sound.
inline std::vector<std::pair<std::string, std::size_t>> unsound_catalog_entries(
    const std::vector<Scheme>& schemes, bool existential_import = true) {
  std::vector<std::pair<std::string, std::size_t>> bad;
  for (const auto& s : schemes)
    for (std::size_t i = 0; i < s.valid_conclusions.size(); ++i)
      if (check_validity(s.with_conclusion(s.valid_conclusions[i]), existential_import).label !=
          Validity::Valid)
        bad.emplace_back(s.id, i);
  return bad;
}

}  // namespace syllosteer
