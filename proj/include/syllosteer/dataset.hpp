#pragma once

// Dataset generation: instantiating schemes into the four validity x
// plausibility cells, balanced counts, split assignment with term-triple
// disjointness between train and test, JSONL serialization and the label
// audit used by the acceptance suite.

#include <array>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "syllosteer/scheme.hpp"
#include "syllosteer/taxonomy.hpp"

namespace syllosteer {

enum class Split : std::uint8_t { Train, Test, Pool };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Pool: return "pool";
  }
  return "?";
}
inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  if (s == "pool") return Split::Pool;
  throw DataError("unknown split: " + s);
}

struct Cell {
  Validity validity;
  Plausibility plausibility;
  bool operator==(const Cell&) const = default;
};

// Fixed cell order used everywhere: VP, VI, IP, II.
inline std::array<Cell, 4> all_cells() {
  return {Cell{Validity::Valid, Plausibility::Plausible},
          Cell{Validity::Valid, Plausibility::Implausible},
          Cell{Validity::Invalid, Plausibility::Plausible},
          Cell{Validity::Invalid, Plausibility::Implausible}};
}

inline std::string cell_code(const Cell& c) {
  std::string out;
  out += c.validity == Validity::Valid ? 'V' : 'I';
  out += c.plausibility == Plausibility::Plausible ? 'P' : 'I';
  return out;
}

// When a cell is marked implausible, which statement gets the taxonomy-false
// binding. Premise is the default policy.
enum class ImplausiblePolicy : std::uint8_t { Premise, Conclusion, Any };

inline const char* to_string(ImplausiblePolicy p) {
  switch (p) {
    case ImplausiblePolicy::Premise: return "premise";
    case ImplausiblePolicy::Conclusion: return "conclusion";
    case ImplausiblePolicy::Any: return "any";
  }
  return "?";
}
inline ImplausiblePolicy implausible_policy_from_string(const std::string& s) {
  if (s == "premise") return ImplausiblePolicy::Premise;
  if (s == "conclusion") return ImplausiblePolicy::Conclusion;
  if (s == "any") return ImplausiblePolicy::Any;
  throw ConfigError("unknown implausible policy: " + s);
}

struct ArgumentInstance {
  std::string id;
  std::string scheme_id;
  std::array<std::string, 3> terms;            // slot bindings A, B, C (singular)
  std::string premise1, premise2, conclusion;  // rendered sentences
  Validity validity = Validity::Valid;
  Plausibility plausibility = Plausibility::Plausible;
  Split split = Split::Pool;
};

// ---------------------------------------------------------------------------
// Cell sampling
// ---------------------------------------------------------------------------

namespace detail {

enum class Req : std::uint8_t { Plausible, Implausible, Free };

inline bool meets(Quantifier q, int subj, int pred, Req req, const Taxonomy& t) {
  if (req == Req::Free) return true;
  return statement_plausible(q, subj, pred, t) == (req == Req::Plausible);
}

// Candidate terms for the unbound side of a statement; `bound_is_subject`
// says which side `bound` occupies. Candidates exclude `bound` and `taken`.
inline std::vector<int> side_pool(Quantifier q, Req req, int bound, bool bound_is_subject,
                                  int taken, const Taxonomy& t) {
  std::vector<int> out;
  const int n = static_cast<int>(t.size());
  for (int y = 0; y < n; ++y) {
    if (y == bound || y == taken) continue;
    const int subj = bound_is_subject ? bound : y;
    const int pred = bound_is_subject ? y : bound;
    if (meets(q, subj, pred, req, t)) out.push_back(y);
  }
  return out;
}

template <typename T>
inline const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

}  // namespace detail

struct SampleOptions {
  ImplausiblePolicy policy = ImplausiblePolicy::Premise;
  bool existential_import = true;
  int budget = 10000;  // attempts before the cell is declared infeasible
};

// Draws one instance of `scheme` in `cell`. Terms are distinct; validity is
// certified by the oracle and plausibility by the statement rule before the
// instance is returned.
inline ArgumentInstance sample_cell_instance(const Scheme& scheme, const Cell& cell,
                                             const Taxonomy& taxonomy, std::mt19937_64& rng,
                                             const SampleOptions& opt = {}) {
  using detail::Req;
  const int n_terms = static_cast<int>(taxonomy.size());
  if (n_terms < 3) throw DataError("taxonomy too small to instantiate schemes");

  // Certified-invalid candidates are scheme-level; compute once per call.
  std::vector<Statement> invalid_candidates;
  if (cell.validity == Validity::Invalid)
    invalid_candidates = certified_invalid_conclusions(scheme, opt.existential_import);

  for (int attempt = 0; attempt < opt.budget; ++attempt) {
    Req req1 = Req::Plausible, req2 = Req::Plausible, req_c = Req::Plausible;
    if (cell.plausibility == Plausibility::Implausible) {
      switch (opt.policy) {
        case ImplausiblePolicy::Premise: {
          const bool first = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
          req1 = first ? Req::Implausible : Req::Free;
          req2 = first ? Req::Free : Req::Implausible;
          req_c = Req::Free;
          break;
        }
        case ImplausiblePolicy::Conclusion:
          req_c = Req::Implausible;
          break;
        case ImplausiblePolicy::Any:
          req1 = req2 = req_c = Req::Free;
          break;
      }
    }

    std::array<int, 3> binding = {-1, -1, -1};
    auto slot_of = [&](Slot s) -> int& { return binding[static_cast<std::size_t>(s)]; };

    // premise 1: free choice of subject, then a pool draw for the predicate
    {
      const Statement& p1 = scheme.premise1;
      const int x = std::uniform_int_distribution<int>(0, n_terms - 1)(rng);
      auto pool = detail::side_pool(p1.q, req1, x, /*bound_is_subject=*/true, -1, taxonomy);
      if (pool.empty()) continue;
      slot_of(p1.subject) = x;
      slot_of(p1.predicate) = detail::pick(pool, rng);
    }

    // premise 2: exactly one slot is already bound in a two-premise scheme
    {
      const Statement& p2 = scheme.premise2;
      int& subj = slot_of(p2.subject);
      int& pred = slot_of(p2.predicate);
      const int other = subj >= 0 ? (pred >= 0 ? -1 : subj) : pred;
      if (subj >= 0 && pred >= 0) {
        if (!detail::meets(p2.q, subj, pred, req2, taxonomy)) continue;
      } else if (other >= 0) {
        const bool bound_is_subject = subj >= 0;
        // the remaining third term must differ from both bound ones
        int taken = -1;
        for (int b : binding)
          if (b >= 0 && b != other) taken = b;
        auto pool = detail::side_pool(p2.q, req2, other, bound_is_subject, taken, taxonomy);
        if (pool.empty()) continue;
        (bound_is_subject ? pred : subj) = detail::pick(pool, rng);
      } else {
        continue;  // disconnected premises never occur in the catalog
      }
    }

    if (binding[0] < 0 || binding[1] < 0 || binding[2] < 0) continue;
    if (binding[0] == binding[1] || binding[0] == binding[2] || binding[1] == binding[2]) continue;

    // conclusion
    std::vector<Statement> conclusion_pool;
    const auto& source =
        cell.validity == Validity::Valid ? scheme.valid_conclusions : invalid_candidates;
    for (const Statement& cand : source) {
      const int subj = binding[static_cast<std::size_t>(cand.subject)];
      const int pred = binding[static_cast<std::size_t>(cand.predicate)];
      if (detail::meets(cand.q, subj, pred, req_c, taxonomy)) conclusion_pool.push_back(cand);
    }
    if (conclusion_pool.empty()) continue;
    const Statement conclusion = detail::pick(conclusion_pool, rng);

    // final certification of both labels
    const Syllogism form{scheme.premise1, scheme.premise2, conclusion};
    if (check_validity(form, opt.existential_import).label != cell.validity) continue;
    auto concrete = [&](const Statement& st) {
      return ConcreteStatement{st.q, taxonomy.term(binding[static_cast<std::size_t>(st.subject)]),
                               taxonomy.term(binding[static_cast<std::size_t>(st.predicate)])};
    };
    const bool all_plausible =
        statement_plausibility(concrete(scheme.premise1), taxonomy) == Plausibility::Plausible &&
        statement_plausibility(concrete(scheme.premise2), taxonomy) == Plausibility::Plausible &&
        statement_plausibility(concrete(conclusion), taxonomy) == Plausibility::Plausible;
    if ((all_plausible ? Plausibility::Plausible : Plausibility::Implausible) != cell.plausibility)
      continue;

    ArgumentInstance inst;
    inst.scheme_id = scheme.id;
    for (int s = 0; s < 3; ++s)
      inst.terms[static_cast<std::size_t>(s)] = taxonomy.term(binding[static_cast<std::size_t>(s)]);
    auto render = [&](const Statement& st) {
      return render_statement(st.q,
                              taxonomy.plural(binding[static_cast<std::size_t>(st.subject)]),
                              taxonomy.plural(binding[static_cast<std::size_t>(st.predicate)]));
    };
    inst.premise1 = render(scheme.premise1);
    inst.premise2 = render(scheme.premise2);
    inst.conclusion = render(conclusion);
    inst.validity = cell.validity;
    inst.plausibility = cell.plausibility;
    return inst;
  }
  throw DataError("cell infeasible after " + std::to_string(opt.budget) +
                  " attempts: scheme " + scheme.id + ", cell " + cell_code(cell) + " (policy " +
                  to_string(opt.policy) + ")");
}

// ---------------------------------------------------------------------------
// Full dataset
// ---------------------------------------------------------------------------

struct GenOptions {
  std::size_t total = 16128;
  std::size_t train_n = 2400;
  std::size_t test_n = 2400;
  std::uint64_t seed = 0;
  SampleOptions sample = {};
};

inline std::vector<ArgumentInstance> generate_dataset(const std::vector<Scheme>& schemes,
                                                      const Taxonomy& taxonomy,
                                                      const GenOptions& opt) {
  const std::size_t groups = schemes.size() * 4;
  if (groups == 0) throw DataError("empty scheme catalog");
  if (opt.total < opt.train_n + opt.test_n)
    throw ConfigError("dataset total (" + std::to_string(opt.total) +
                      ") smaller than train+test (" + std::to_string(opt.train_n + opt.test_n) +
                      ")");
  auto divisible = [&](std::size_t v, const char* what) {
    if (v % groups != 0)
      throw ConfigError(std::string(what) + " count " + std::to_string(v) +
                        " not divisible by schemes x cells = " + std::to_string(groups));
  };
  divisible(opt.total, "total");
  divisible(opt.train_n, "train");
  divisible(opt.test_n, "test");

  const std::size_t per_group = opt.total / groups;
  const std::size_t train_pp = opt.train_n / groups;
  const std::size_t test_pp = opt.test_n / groups;

  // term-triple -> split registry for the train/test disjointness guarantee
  std::unordered_map<std::string, Split> claimed;
  auto triple_key = [](const ArgumentInstance& inst) {
    std::array<std::string, 3> t = inst.terms;
    std::sort(t.begin(), t.end());
    return t[0] + "\x1f" + t[1] + "\x1f" + t[2];
  };

  std::vector<ArgumentInstance> out;
  out.reserve(opt.total);
  std::vector<std::string> infeasible;

  const auto cells = all_cells();
  for (std::size_t si = 0; si < schemes.size(); ++si) {
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      std::mt19937_64 rng(derive_seed(opt.seed, si, ci));
      for (std::size_t i = 0; i < per_group; ++i) {
        const Split split = i < train_pp            ? Split::Train
                            : i < train_pp + test_pp ? Split::Test
                                                     : Split::Pool;
        ArgumentInstance inst;
        bool placed = false;
        try {
          for (int tries = 0; tries < 64 && !placed; ++tries) {
            inst = sample_cell_instance(schemes[si], cells[ci], taxonomy, rng, opt.sample);
            if (split == Split::Pool) {
              placed = true;
              break;
            }
            auto [it, fresh] = claimed.try_emplace(triple_key(inst), split);
            placed = fresh || it->second == split;
          }
        } catch (const DataError&) {
          infeasible.push_back(schemes[si].id + "/" + cell_code(cells[ci]));
          break;
        }
        if (!placed) {
          infeasible.push_back(schemes[si].id + "/" + cell_code(cells[ci]) +
                               " (split disjointness)");
          break;
        }
        inst.split = split;
        inst.id = schemes[si].id + "-" + cell_code(cells[ci]) + "-" + std::to_string(i);
        out.push_back(std::move(inst));
      }
    }
  }
  if (!infeasible.empty()) {
    std::string msg = "dataset generation infeasible for (scheme, cell) pairs:";
    for (const auto& p : infeasible) msg += " " + p;
    throw DataError(msg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL serialization
// ---------------------------------------------------------------------------

inline nlohmann::json instance_to_json(const ArgumentInstance& a) {
  return {{"id", a.id},
          {"scheme_id", a.scheme_id},
          {"terms", a.terms},
          {"premise1", a.premise1},
          {"premise2", a.premise2},
          {"conclusion", a.conclusion},
          {"validity", to_string(a.validity)},
          {"plausibility", to_string(a.plausibility)},
          {"split", to_string(a.split)}};
}

inline ArgumentInstance instance_from_json(const nlohmann::json& j) {
  ArgumentInstance a;
  a.id = j.at("id").get<std::string>();
  a.scheme_id = j.at("scheme_id").get<std::string>();
  const auto terms = j.at("terms");
  if (!terms.is_array() || terms.size() != 3) throw DataError("instance terms must have 3 entries");
  for (std::size_t i = 0; i < 3; ++i) a.terms[i] = terms[i].get<std::string>();
  a.premise1 = j.at("premise1").get<std::string>();
  a.premise2 = j.at("premise2").get<std::string>();
  a.conclusion = j.at("conclusion").get<std::string>();
  a.validity = validity_from_string(j.at("validity").get<std::string>());
  a.plausibility = plausibility_from_string(j.at("plausibility").get<std::string>());
  a.split = split_from_string(j.at("split").get<std::string>());
  return a;
}

inline void write_dataset_jsonl(const std::filesystem::path& path,
                                const std::vector<ArgumentInstance>& data) {
  std::string out;
  for (const auto& a : data) {
    out += instance_to_json(a).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<ArgumentInstance> read_dataset_jsonl(const std::filesystem::path& path) {
  std::vector<ArgumentInstance> out;
  int line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw DataError(path.string() + ": empty dataset");
  return out;
}

// ---------------------------------------------------------------------------
// Label audit
// ---------------------------------------------------------------------------

struct AuditReport {
  std::size_t checked = 0;
  std::size_t validity_mismatches = 0;
  std::size_t plausibility_mismatches = 0;
  std::size_t split_overlaps = 0;
  std::vector<std::string> problems;

  bool clean() const {
    return validity_mismatches == 0 && plausibility_mismatches == 0 && split_overlaps == 0 &&
           problems.empty();
  }
};

// Re-derives every label from the serialized surface forms: statements are
// parsed back from text, mapped onto slots via the stored term bindings, and
// run through the oracle and the plausibility rule.
inline AuditReport audit_dataset(const std::vector<ArgumentInstance>& data,
                                 const std::vector<Scheme>& schemes, const Taxonomy& taxonomy,
                                 bool existential_import = true) {
  AuditReport report;
  std::map<std::string, const Scheme*> by_id;
  for (const auto& s : schemes) by_id[s.id] = &s;

  std::set<std::string> train_triples, test_triples;
  for (const auto& a : data) {
    ++report.checked;
    auto note = [&](const std::string& msg) { report.problems.push_back(a.id + ": " + msg); };

    auto to_slots = [&](const ConcreteStatement& cs) -> std::optional<Statement> {
      auto find = [&](const std::string& term) -> int {
        for (int s = 0; s < 3; ++s)
          if (a.terms[static_cast<std::size_t>(s)] == term) return s;
        return -1;
      };
      const int subj = find(cs.subject), pred = find(cs.predicate);
      if (subj < 0 || pred < 0) return std::nullopt;
      return Statement{cs.q, static_cast<Slot>(subj), static_cast<Slot>(pred)};
    };

    std::array<std::optional<ConcreteStatement>, 3> parsed = {
        parse_concrete_statement(a.premise1, taxonomy),
        parse_concrete_statement(a.premise2, taxonomy),
        parse_concrete_statement(a.conclusion, taxonomy)};
    if (!parsed[0] || !parsed[1] || !parsed[2]) {
      note("statement text does not parse against the taxonomy");
      continue;
    }
    auto s1 = to_slots(*parsed[0]), s2 = to_slots(*parsed[1]), sc = to_slots(*parsed[2]);
    if (!s1 || !s2 || !sc) {
      note("statement uses a term outside the instance bindings");
      continue;
    }
    auto scheme_it = by_id.find(a.scheme_id);
    if (scheme_it == by_id.end()) {
      note("unknown scheme id");
      continue;
    }
    if (!(*s1 == scheme_it->second->premise1) || !(*s2 == scheme_it->second->premise2))
      note("premises do not match the scheme pattern");

    const Validity v = check_validity({*s1, *s2, *sc}, existential_import).label;
    if (v != a.validity) ++report.validity_mismatches;

    const bool all_plausible =
        statement_plausibility(*parsed[0], taxonomy) == Plausibility::Plausible &&
        statement_plausibility(*parsed[1], taxonomy) == Plausibility::Plausible &&
        statement_plausibility(*parsed[2], taxonomy) == Plausibility::Plausible;
    if ((all_plausible ? Plausibility::Plausible : Plausibility::Implausible) != a.plausibility)
      ++report.plausibility_mismatches;

    std::array<std::string, 3> t = a.terms;
    std::sort(t.begin(), t.end());
    const std::string key = t[0] + "\x1f" + t[1] + "\x1f" + t[2];
    if (a.split == Split::Train) train_triples.insert(key);
    if (a.split == Split::Test) test_triples.insert(key);
  }
  for (const auto& k : train_triples)
    if (test_triples.count(k)) ++report.split_overlaps;
  return report;
}

inline std::array<std::size_t, 4> cell_counts(const std::vector<ArgumentInstance>& data) {
  std::array<std::size_t, 4> counts{};
  const auto cells = all_cells();
  for (const auto& a : data)
    for (std::size_t i = 0; i < 4; ++i)
      if (cells[i].validity == a.validity && cells[i].plausibility == a.plausibility) ++counts[i];
  return counts;
}

}  // namespace syllosteer
