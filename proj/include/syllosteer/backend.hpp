#pragma once

// The model-backend contract: one forward pass with optional activation
// capture and optional activation-addition intervention, plus the capture_run
// / steered_run drivers built on top of it.

#include <memory>
#include <variant>

#include "syllosteer/steering.hpp"

namespace syllosteer {

enum class PositionPolicy : std::uint8_t { LastInputToken, AllPositions };

inline const char* to_string(PositionPolicy p) {
  return p == PositionPolicy::LastInputToken ? "last_input_token" : "all_positions";
}
inline PositionPolicy position_policy_from_string(const std::string& s) {
  if (s == "last_input_token") return PositionPolicy::LastInputToken;
  if (s == "all_positions") return PositionPolicy::AllPositions;
  throw ConfigError("unknown position policy: " + s);
}

struct CaptureSpec {
  std::vector<int> layers;  // ascending
  Site site = Site::ResidualStream;
  PositionPolicy position = PositionPolicy::LastInputToken;

  void validate(int depth) const {
    int prev = -1;
    for (int l : layers) {
      if (l < 0 || l >= depth)
        throw ConfigError("capture layer " + std::to_string(l) + " outside depth " +
                          std::to_string(depth));
      if (l <= prev) throw ConfigError("capture layers must be strictly ascending");
      prev = l;
    }
  }
};

// ---------------------------------------------------------------------------
// Alpha rules
// ---------------------------------------------------------------------------

struct StaticAlphaRule {
  double alpha = 0.0;  // signed coefficient, applied as-is
};

struct CastAlphaRule {
  ConditionVector psi_plus;   // valid-condition vector
  ConditionVector psi_minus;  // invalid-condition vector
  double alpha = 0.0;         // magnitude; sign resolved per input
  bool signed_cosine = false;
  int condition_layer = 0;
};

struct KnnAlphaRule {
  std::shared_ptr<const KnnConditionModel> model;
  double alpha = 0.0;  // magnitude
  int condition_layer = 0;
};

using AlphaRule = std::variant<StaticAlphaRule, CastAlphaRule, KnnAlphaRule>;

inline const char* rule_family(const AlphaRule& rule) {
  if (std::holds_alternative<StaticAlphaRule>(rule)) return "static";
  if (std::holds_alternative<CastAlphaRule>(rule)) return "cast";
  return "knn";
}

// Condition layer of a conditional rule; -1 for static.
inline int rule_condition_layer(const AlphaRule& rule) {
  if (const auto* c = std::get_if<CastAlphaRule>(&rule)) return c->condition_layer;
  if (const auto* k = std::get_if<KnnAlphaRule>(&rule)) return k->condition_layer;
  return -1;
}

// Resolves the signed coefficient for one input's condition activation.
inline double resolve_coefficient(const AlphaRule& rule, std::span<const double> condition_phi) {
  if (const auto* s = std::get_if<StaticAlphaRule>(&rule)) return s->alpha;
  if (const auto* c = std::get_if<CastAlphaRule>(&rule))
    return cast_alpha(condition_phi, c->psi_plus, c->psi_minus, c->alpha, c->signed_cosine);
  const auto& k = std::get<KnnAlphaRule>(rule);
  if (!k.model) throw ConfigError("knn rule without a condition model");
  return knn_alpha(knn_condition(condition_phi, *k.model), k.alpha);
}

struct InterventionSpec {
  std::vector<int> layers;  // ascending; empty means no-op
  PositionPolicy position = PositionPolicy::LastInputToken;
  Site site = Site::ResidualStream;
  std::vector<SteeringVector> deltas;  // aligned with layers
  AlphaRule rule = StaticAlphaRule{};

  void validate(int depth, std::size_t width) const {
    if (deltas.size() != layers.size())
      throw ConfigError("intervention needs one steering vector per layer");
    int prev = -1;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const int l = layers[i];
      if (l < 0 || l >= depth)
        throw ConfigError("intervention layer " + std::to_string(l) + " outside depth " +
                          std::to_string(depth));
      if (l <= prev) throw ConfigError("intervention layers must be strictly ascending");
      prev = l;
      if (deltas[i].values.size() != width)
        throw DataError("steering vector width " + std::to_string(deltas[i].values.size()) +
                        " does not match model width " + std::to_string(width));
      if (deltas[i].layer != l)
        throw ConfigError("steering vector computed for layer " +
                          std::to_string(deltas[i].layer) + " applied at layer " +
                          std::to_string(l));
    }
    const int cond = rule_condition_layer(rule);
    if (cond >= 0) {
      if (cond >= depth) throw ConfigError("condition layer outside model depth");
      if (!layers.empty() && cond > layers.front())
        throw ConfigError("condition layer " + std::to_string(cond) +
                          " must not be above the first intervention layer " +
                          std::to_string(layers.front()));
    }
  }

  const SteeringVector* delta_at(int layer) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i] == layer) return &deltas[i];
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Backend contract
// ---------------------------------------------------------------------------

struct RunResult {
  double score_a = 0.0;  // label score of the first answer string
  double score_b = 0.0;
  std::string continuation;                      // greedy decode, fallback parsing
  std::vector<std::vector<float>> activations;  // aligned with capture layers
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string name() const = 0;
  virtual int depth() const = 0;
  virtual int width() const = 0;

  // Deterministic under a fixed seed; greedy decoding.
  virtual RunResult run(const std::string& prompt, const std::string& answer_a,
                        const std::string& answer_b, const CaptureSpec* capture,
                        const InterventionSpec* intervention) = 0;

  // Average per-token negative log-likelihood over a token sequence, for the
  // language-modeling side-effect evaluation.
  virtual double sequence_nll(const std::vector<std::string>& tokens,
                              const InterventionSpec* intervention) {
    (void)tokens;
    (void)intervention;
    throw BackendError(name() + " backend does not support language-model scoring");
  }
};

namespace detail {
inline Prediction prediction_from_result(const RunResult& res) {
  if (std::isnan(res.score_a) || std::isnan(res.score_b))
    return parse_prediction(res.continuation);
  return parse_prediction(res.score_a, res.score_b);
}
}  // namespace detail

// One forward pass with capture; the record stores vectors at the last input
// token for every requested layer.
inline ActivationRecord capture_run(ModelBackend& backend, const ArgumentInstance& instance,
                                    const PromptSpec& prompt_spec, const CaptureSpec& capture) {
  capture.validate(backend.depth());
  const std::string prompt = build_prompt(instance, prompt_spec);
  RunResult res;
  try {
    res = backend.run(prompt, kAnswerValid, kAnswerInvalid, &capture, nullptr);
  } catch (const BackendError& e) {
    throw BackendError("instance " + instance.id + ": " + e.what());
  }

  ActivationRecord rec;
  rec.instance_id = instance.id;
  rec.prompt_variant = prompt_spec.template_id;
  rec.site = capture.site;
  rec.layers = capture.layers;
  rec.vectors = std::move(res.activations);
  if (rec.vectors.size() != rec.layers.size())
    throw BackendError("instance " + instance.id + ": backend returned " +
                       std::to_string(rec.vectors.size()) + " activations for " +
                       std::to_string(rec.layers.size()) + " capture layers");
  rec.prediction = detail::prediction_from_result(res);
  rec.gold_validity = instance.validity;
  rec.gold_plausibility = instance.plausibility;
  rec.correct = (rec.prediction == Prediction::Valid && instance.validity == Validity::Valid) ||
                (rec.prediction == Prediction::Invalid && instance.validity == Validity::Invalid);
  return rec;
}

// One steered pass; conditional rules read their condition activation in the
// same pass, below the intervention band.
inline Prediction steered_run(ModelBackend& backend, const ArgumentInstance& instance,
                              const PromptSpec& prompt_spec,
                              const InterventionSpec& intervention) {
  intervention.validate(backend.depth(), static_cast<std::size_t>(backend.width()));
  const std::string prompt = build_prompt(instance, prompt_spec);
  try {
    const RunResult res =
        backend.run(prompt, kAnswerValid, kAnswerInvalid, nullptr, &intervention);
    return detail::prediction_from_result(res);
  } catch (const BackendError& e) {
    throw BackendError("instance " + instance.id + ": " + e.what());
  }
}

}  // namespace syllosteer
