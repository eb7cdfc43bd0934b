#pragma once

// Prompt construction from the seven instruction template variants, plus
// prediction extraction from answer-string scores or generated text.

#include <array>
#include <string>
#include <vector>

#include "syllosteer/dataset.hpp"

namespace syllosteer {

enum class Prediction : std::uint8_t { Valid, Invalid, Unparseable };

inline const char* to_string(Prediction p) {
  switch (p) {
    case Prediction::Valid: return "VALID";
    case Prediction::Invalid: return "INVALID";
    case Prediction::Unparseable: return "UNPARSEABLE";
  }
  return "?";
}
inline Prediction prediction_from_string(const std::string& s) {
  if (s == "VALID") return Prediction::Valid;
  if (s == "INVALID") return Prediction::Invalid;
  if (s == "UNPARSEABLE") return Prediction::Unparseable;
  throw DataError("unknown prediction label: " + s);
}

// The two answer surface strings scored by backends.
inline constexpr const char* kAnswerValid = "valid";
inline constexpr const char* kAnswerInvalid = "invalid";

inline constexpr int kNumPromptTemplates = 7;

// Variants 0..6, with {premise1}/{premise2}/{conclusion} placeholders.
inline const std::array<std::string, kNumPromptTemplates>& prompt_templates() {
  static const std::array<std::string, kNumPromptTemplates> templates = {
      // Variation 0
      "Given the premises, evaluate the validity of the conclusion.\n"
      "\n"
      "Premises:\n"
      "{premise1}.\n"
      "{premise2}.\n"
      "\n"
      "Conclusion: {conclusion}.\n"
      "\n"
      "The conclusion is",
      // Variation 1
      "Carefully evaluate the validity of the following logical argument\n"
      "and answer'the argument is logically valid' or 'the argument is \n"
      "logically invalid'.\n"
      "\n"
      "Premise1: {premise1}.\n"
      "Premise2: {premise2}.\n"
      "Conclusion: {conclusion}.\n"
      "\n"
      "The argument is logically",
      // Variation 2
      "Analyze the formal logical structure of the argument below, then \n"
      "indicate whether it is valid or invalid.\n"
      "\n"
      "Premise 1: {premise1}\n"
      "Premise 2: {premise2}\n"
      "Conclusion: {conclusion}\n"
      "\n"
      "The logical structure is",
      // Variation 3
      "Assess carefully whether the argument presented below is \n"
      "logically valid or invalid based on the given premises and conclusion.\n"
      " \n"
      "1. {premise1}\n"
      "2. {premise2}\n"
      "\n"
      "Conclusion:\n"
      "{conclusion}\n"
      "\n"
      "The argument is logically",
      // Variation 4
      "Examine the following argument, generating \"valid\" if the conclusion\n"
      "logically follows from the premises provided, \"invalid\" otherwise.\n"
      " \n"
      "- Premise 1: {premise1}\n"
      "- Premise 2: {premise2}\n"
      "Conclusion: {conclusion}\n"
      "\n"
      "The argument is",
      // Variation 5
      "Given the two premises and the conclusion below, judge carefully \n"
      "whether the logical argument is valid or invalid.\n"
      "\n"
      "Premise 1: {premise1}\n"
      "Premise 2: {premise2}\n"
      "Conclusion: {conclusion}\n"
      "\n"
      "The logical argument is",
      // Variation 6
      "Evaluate the following logical argument carefully and decide whether\n"
      "the provided conclusion is formally valid or invalid given the two premises.\n"
      "\n"
      "Premise 1: {premise1}\n"
      "Premise 2: {premise2}\n"
      "Conclusion: {conclusion}\n"
      "\n"
      "The conclusion is formally"};
  return templates;
}

enum class PromptMode : std::uint8_t { ZeroShot, Icl };

struct Exemplar {
  ArgumentInstance instance;
  Validity gold;
};

struct PromptSpec {
  int template_id = 0;
  PromptMode mode = PromptMode::ZeroShot;
  std::vector<Exemplar> exemplars;  // exactly 4 in ICL mode, from the train split
};

namespace detail {
inline std::string fill_template(int template_id, const std::string& premise1,
                                 const std::string& premise2, const std::string& conclusion) {
  if (template_id < 0 || template_id >= kNumPromptTemplates)
    throw ConfigError("prompt template id out of range: " + std::to_string(template_id));
  std::string text = prompt_templates()[static_cast<std::size_t>(template_id)];
  text = replace_all(std::move(text), "{premise1}", premise1);
  text = replace_all(std::move(text), "{premise2}", premise2);
  text = replace_all(std::move(text), "{conclusion}", conclusion);
  return text;
}
}  // namespace detail

inline std::string build_prompt(const ArgumentInstance& instance, const PromptSpec& spec) {
  std::string out;
  if (spec.mode == PromptMode::Icl) {
    if (spec.exemplars.size() != 4)
      throw ConfigError("icl mode needs exactly 4 exemplars, got " +
                        std::to_string(spec.exemplars.size()));
    for (const auto& ex : spec.exemplars) {
      if (ex.instance.split != Split::Train)
        throw ConfigError("icl exemplar " + ex.instance.id + " is not from the train split");
      out += detail::fill_template(spec.template_id, ex.instance.premise1, ex.instance.premise2,
                                   ex.instance.conclusion);
      out += ' ';
      out += ex.gold == Validity::Valid ? kAnswerValid : kAnswerInvalid;
      out += ".\n\n";
    }
  }
  out += detail::fill_template(spec.template_id, instance.premise1, instance.premise2,
                               instance.conclusion);
  return out;
}

// Seeded exemplar selection: one per cell, fixed for the whole run.
inline std::vector<Exemplar> select_exemplars(const std::vector<ArgumentInstance>& data,
                                              std::uint64_t seed) {
  std::vector<Exemplar> out;
  std::mt19937_64 rng(derive_seed(seed, 0x1c1));
  for (const Cell& cell : all_cells()) {
    std::vector<const ArgumentInstance*> pool;
    for (const auto& a : data)
      if (a.split == Split::Train && a.validity == cell.validity &&
          a.plausibility == cell.plausibility)
        pool.push_back(&a);
    if (pool.empty())
      throw DataError("no train instances available for cell " + cell_code(cell));
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    const ArgumentInstance* chosen = pool[d(rng)];
    out.push_back({*chosen, chosen->validity});
  }
  return out;
}

// Argmax over the two answer-string scores. Exact ties resolve to VALID, the
// same convention the readout tie rule uses.
inline Prediction parse_prediction(double score_valid, double score_invalid) {
  return score_valid >= score_invalid ? Prediction::Valid : Prediction::Invalid;
}

// Fallback: scan generated text, testing "invalid" before "valid" since the
// former contains the latter.
inline Prediction parse_prediction(const std::string& continuation) {
  const std::string lower = to_lower(continuation);
  if (lower.find("invalid") != std::string::npos) return Prediction::Invalid;
  if (lower.find("valid") != std::string::npos) return Prediction::Valid;
  return Prediction::Unparseable;
}

}  // namespace syllosteer
