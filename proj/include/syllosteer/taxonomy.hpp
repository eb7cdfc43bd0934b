#pragma once

// Hypernym taxonomy: a DAG of child->parent links with stored plural surface
// forms. Ancestor queries use the reflexive-transitive closure, precomputed
// as bitsets at load time. Statement plausibility is defined purely in terms
// of the ancestor relation.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "syllosteer/logic.hpp"

namespace syllosteer {

class Taxonomy {
 public:
  static Taxonomy load(const std::filesystem::path& path) {
    return from_lines(read_lines(path), path.string());
  }

  // Lines: "child\tparent\tchild_plural\tparent_plural" (edge; a plural field
  // may be empty when the term was declared earlier) or "term\tplural"
  // (isolated term). '#' comments and blank lines are skipped.
  static Taxonomy from_lines(const std::vector<std::string>& lines,
                             const std::string& origin = "<memory>") {
    Taxonomy t;
    int line_no = 0;
    for (const auto& raw : lines) {
      ++line_no;
      std::string line = raw;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty() || trim(line)[0] == '#') continue;
      const auto fields = split(line, '\t');
      auto err = [&](const std::string& msg) {
        return DataError(origin + ":" + std::to_string(line_no) + ": " + msg);
      };
      if (fields.size() == 2) {
        t.intern(trim(fields[0]), trim(fields[1]), err);
      } else if (fields.size() == 4) {
        int child = t.intern(trim(fields[0]), trim(fields[2]), err);
        int parent = t.intern(trim(fields[1]), trim(fields[3]), err);
        if (child == parent) throw err("self-edge on term '" + fields[0] + "'");
        t.parents_[static_cast<std::size_t>(child)].push_back(parent);
      } else {
        throw err("expected 2 or 4 tab-separated fields, got " + std::to_string(fields.size()));
      }
    }
    if (t.terms_.empty()) throw DataError(origin + ": taxonomy defines no terms");
    for (std::size_t i = 0; i < t.terms_.size(); ++i)
      if (t.plurals_[i].empty())
        throw DataError(origin + ": unknown term in edge: '" + t.terms_[i] +
                        "' never receives a plural form");
    for (std::size_t i = 0; i < t.terms_.size(); ++i) {
      if (!t.plural_index_.emplace(t.plurals_[i], static_cast<int>(i)).second &&
          t.plural_index_[t.plurals_[i]] != static_cast<int>(i))
        throw DataError(origin + ": plural form '" + t.plurals_[i] + "' is ambiguous");
    }
    t.build_closure();
    return t;
  }

  std::size_t size() const { return terms_.size(); }

  int term_id(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? -1 : it->second;
  }
  int require_term(const std::string& term) const {
    int id = term_id(term);
    if (id < 0) throw DataError("unknown term: '" + term + "'");
    return id;
  }
  const std::string& term(int id) const { return terms_[static_cast<std::size_t>(id)]; }
  const std::string& plural(int id) const { return plurals_[static_cast<std::size_t>(id)]; }
  const std::string& plural_of(const std::string& t) const { return plural(require_term(t)); }
  int term_from_plural(const std::string& plural) const {
    auto it = plural_index_.find(plural);
    return it == plural_index_.end() ? -1 : it->second;
  }

  // Reflexive: ancestor(x, x) is true.
  bool ancestor(int x, int y) const {
    const auto& bits = anc_bits_[static_cast<std::size_t>(x)];
    return (bits[static_cast<std::size_t>(y) >> 6] >> (y & 63)) & 1;
  }
  bool ancestor(const std::string& x, const std::string& y) const {
    return ancestor(require_term(x), require_term(y));
  }
  bool related(int x, int y) const { return ancestor(x, y) || ancestor(y, x); }

  const std::vector<int>& strict_ancestors(int id) const {
    return strict_anc_[static_cast<std::size_t>(id)];
  }
  const std::vector<int>& strict_descendants(int id) const {
    return strict_desc_[static_cast<std::size_t>(id)];
  }

 private:
  template <typename Err>
  int intern(const std::string& term, const std::string& plural, Err&& err) {
    if (term.empty()) throw err("empty term");
    auto it = index_.find(term);
    int id;
    if (it == index_.end()) {
      id = static_cast<int>(terms_.size());
      index_.emplace(term, id);
      terms_.push_back(term);
      plurals_.emplace_back();
      parents_.emplace_back();
    } else {
      id = it->second;
    }
    auto& stored = plurals_[static_cast<std::size_t>(id)];
    if (!plural.empty()) {
      if (!stored.empty() && stored != plural)
        throw err("conflicting plural for '" + term + "': '" + stored + "' vs '" + plural + "'");
      stored = plural;
    }
    return id;
  }

  void build_closure() {
    const std::size_t n = terms_.size();
    const std::size_t words = (n + 63) / 64;
    anc_bits_.assign(n, std::vector<std::uint64_t>(words, 0));
    // 0 = unvisited, 1 = in progress, 2 = done
    std::vector<int> state(n, 0);
    for (std::size_t start = 0; start < n; ++start) visit(static_cast<int>(start), state, words);

    strict_anc_.assign(n, {});
    strict_desc_.assign(n, {});
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        if (x != y && ancestor(static_cast<int>(x), static_cast<int>(y))) {
          strict_anc_[x].push_back(static_cast<int>(y));
          strict_desc_[y].push_back(static_cast<int>(x));
        }
  }

  void visit(int node, std::vector<int>& state, std::size_t words) {
    auto& st = state[static_cast<std::size_t>(node)];
    if (st == 2) return;
    if (st == 1)
      throw DataError("taxonomy contains a cycle through term '" +
                      terms_[static_cast<std::size_t>(node)] + "'");
    st = 1;
    auto& bits = anc_bits_[static_cast<std::size_t>(node)];
    bits[static_cast<std::size_t>(node) >> 6] |= 1ull << (node & 63);
    for (int parent : parents_[static_cast<std::size_t>(node)]) {
      visit(parent, state, words);
      const auto& pb = anc_bits_[static_cast<std::size_t>(parent)];
      for (std::size_t w = 0; w < words; ++w) bits[w] |= pb[w];
    }
    st = 2;
  }

  std::vector<std::string> terms_, plurals_;
  std::unordered_map<std::string, int> index_, plural_index_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<std::uint64_t>> anc_bits_;
  std::vector<std::vector<int>> strict_anc_, strict_desc_;
};

// Statement-level plausibility rule. A: subject's hypernyms must include the
// predicate. I: related in either direction. E: unrelated both ways.
// O: predicate is not a hypernym of the subject.
inline bool statement_plausible(Quantifier q, int subj, int pred, const Taxonomy& t) {
  switch (q) {
    case Quantifier::All: return t.ancestor(subj, pred);
    case Quantifier::Some: return t.related(subj, pred);
    case Quantifier::No: return !t.related(subj, pred);
    case Quantifier::SomeNot: return !t.ancestor(subj, pred);
  }
  return false;
}

inline Plausibility statement_plausibility(const ConcreteStatement& s, const Taxonomy& t) {
  return statement_plausible(s.q, t.require_term(s.subject), t.require_term(s.predicate), t)
             ? Plausibility::Plausible
             : Plausibility::Implausible;
}

// Parses a rendered statement ("All apples are edible fruits", optionally
// ending in '.') back into singular terms via the plural reverse map.
// Returns nullopt for text that is not a statement over known terms.
inline std::optional<ConcreteStatement> parse_concrete_statement(std::string_view text,
                                                                 const Taxonomy& t) {
  std::string s = trim(text);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  s = trim(s);

  Quantifier q;
  std::size_t body_start;
  if (starts_with_ci(s, "All ")) {
    q = Quantifier::All;
    body_start = 4;
  } else if (starts_with_ci(s, "No ")) {
    q = Quantifier::No;
    body_start = 3;
  } else if (starts_with_ci(s, "Some ")) {
    q = Quantifier::Some;
    body_start = 5;
  } else {
    return std::nullopt;
  }

  const std::string body = s.substr(body_start);
  std::size_t are = body.find(" are ");
  if (are == std::string::npos) return std::nullopt;
  std::string subject_plural = body.substr(0, are);
  std::string rest = body.substr(are + 5);
  if (q == Quantifier::Some && rest.rfind("not ", 0) == 0) {
    q = Quantifier::SomeNot;
    rest = rest.substr(4);
  }
  const int subj = t.term_from_plural(subject_plural);
  const int pred = t.term_from_plural(rest);
  if (subj < 0 || pred < 0) return std::nullopt;
  return ConcreteStatement{q, t.term(subj), t.term(pred)};
}

}  // namespace syllosteer
