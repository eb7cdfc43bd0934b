#pragma once

// Categorical statements over three term slots, and the region-model
// semantics that decides formal validity. A model assigns inhabited/empty to
// each of the 8 Boolean regions of three unary predicates, so exhaustive
// checking over all 256 models is exact and fast.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "syllosteer/common.hpp"

namespace syllosteer {

enum class Quantifier : std::uint8_t { All, No, Some, SomeNot };
enum class Slot : std::uint8_t { A = 0, B = 1, C = 2 };
enum class Validity : std::uint8_t { Valid, Invalid };
enum class Plausibility : std::uint8_t { Plausible, Implausible };

inline char quantifier_letter(Quantifier q) {
  switch (q) {
    case Quantifier::All: return 'A';
    case Quantifier::No: return 'E';
    case Quantifier::Some: return 'I';
    case Quantifier::SomeNot: return 'O';
  }
  return '?';
}

inline const char* to_string(Validity v) { return v == Validity::Valid ? "VALID" : "INVALID"; }
inline const char* to_string(Plausibility p) {
  return p == Plausibility::Plausible ? "PLAUSIBLE" : "IMPLAUSIBLE";
}

inline Validity validity_from_string(const std::string& s) {
  if (s == "VALID") return Validity::Valid;
  if (s == "INVALID") return Validity::Invalid;
  throw DataError("unknown validity label: " + s);
}

inline Plausibility plausibility_from_string(const std::string& s) {
  if (s == "PLAUSIBLE") return Plausibility::Plausible;
  if (s == "IMPLAUSIBLE") return Plausibility::Implausible;
  throw DataError("unknown plausibility label: " + s);
}

// A quantified statement over abstract term slots. Slots must differ.
struct Statement {
  Quantifier q;
  Slot subject;
  Slot predicate;
  bool operator==(const Statement&) const = default;
};

struct Syllogism {
  Statement premise1;
  Statement premise2;
  Statement conclusion;
};

// A statement over concrete terms (singular forms; rendering uses plurals).
struct ConcreteStatement {
  Quantifier q;
  std::string subject;
  std::string predicate;
  bool operator==(const ConcreteStatement&) const = default;
};

// The four surface templates. `subject`/`predicate` are plural noun phrases.
inline std::string render_statement(Quantifier q, const std::string& subject,
                                    const std::string& predicate) {
  switch (q) {
    case Quantifier::All: return "All " + subject + " are " + predicate;
    case Quantifier::No: return "No " + subject + " are " + predicate;
    case Quantifier::Some: return "Some " + subject + " are " + predicate;
    case Quantifier::SomeNot: return "Some " + subject + " are not " + predicate;
  }
  throw DataError("unreachable quantifier");
}

// ---------------------------------------------------------------------------
// Region models
// ---------------------------------------------------------------------------

// Region index r in [0,8): bit 2 = membership in A, bit 1 = B, bit 0 = C.
struct RegionModel {
  std::uint8_t inhabited = 0;

  bool has(int region) const { return (inhabited >> region) & 1; }
  bool operator==(const RegionModel&) const = default;
};

namespace detail {
// Bitmask over the 8 regions in which `slot` holds.
inline std::uint8_t slot_mask(Slot slot) {
  switch (slot) {
    case Slot::A: return 0b11110000;
    case Slot::B: return 0b11001100;
    case Slot::C: return 0b10101010;
  }
  return 0;
}
}  // namespace detail

inline bool statement_holds(const Statement& s, const RegionModel& m) {
  if (s.subject == s.predicate) throw DataError("statement with identical subject and predicate slots");
  const std::uint8_t subj = detail::slot_mask(s.subject);
  const std::uint8_t pred = detail::slot_mask(s.predicate);
  switch (s.q) {
    case Quantifier::All: return (m.inhabited & subj & static_cast<std::uint8_t>(~pred)) == 0;
    case Quantifier::No: return (m.inhabited & subj & pred) == 0;
    case Quantifier::Some: return (m.inhabited & subj & pred) != 0;
    case Quantifier::SomeNot:
      return (m.inhabited & subj & static_cast<std::uint8_t>(~pred)) != 0;
  }
  return false;
}

// With existential import every one of A, B, C must be non-empty.
inline bool model_admissible(const RegionModel& m, bool existential_import) {
  if (!existential_import) return true;
  return (m.inhabited & detail::slot_mask(Slot::A)) && (m.inhabited & detail::slot_mask(Slot::B)) &&
         (m.inhabited & detail::slot_mask(Slot::C));
}

struct ValidityResult {
  Validity label;
  std::optional<RegionModel> counterexample;  // satisfies premises, falsifies conclusion
};

// Valid iff no admissible model satisfies both premises and the negated
// conclusion; otherwise the first countermodel found is returned.
inline ValidityResult check_validity(const Syllogism& syl, bool existential_import) {
  for (int bits = 0; bits < 256; ++bits) {
    RegionModel m{static_cast<std::uint8_t>(bits)};
    if (!model_admissible(m, existential_import)) continue;
    if (statement_holds(syl.premise1, m) && statement_holds(syl.premise2, m) &&
        !statement_holds(syl.conclusion, m)) {
      return {Validity::Invalid, m};
    }
  }
  return {Validity::Valid, std::nullopt};
}

// All 24 candidate conclusions: 4 quantifiers x 6 ordered slot pairs.
inline std::array<Statement, 24> candidate_conclusions() {
  std::array<Statement, 24> out{};
  static constexpr Quantifier qs[4] = {Quantifier::All, Quantifier::No, Quantifier::Some,
                                       Quantifier::SomeNot};
  static constexpr Slot slots[3] = {Slot::A, Slot::B, Slot::C};
  std::size_t i = 0;
  for (Quantifier q : qs)
    for (Slot s : slots)
      for (Slot p : slots)
        if (s != p) out[i++] = Statement{q, s, p};
  return out;
}

}  // namespace syllosteer
