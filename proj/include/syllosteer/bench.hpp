#pragma once

// Planted-structure activation bench: a deterministic generator whose records
// carry a validity direction v and a plausibility direction p, plus a biased
// linear readout that leaks plausibility into validity judgments when
// beta > 0. Every downstream module (stores, probing, steering, sweeps) runs
// on these records unmodified.
//
// The readout also carries a small negative intercept and the p component a
// reduced amplitude; a perfectly antipodal design would make the correct and
// incorrect activation means coincide at zero and leave nothing for
// contrastive vectors to find.

#include <cmath>
#include <memory>

#include "syllosteer/backend.hpp"
#include "syllosteer/taxonomy.hpp"

namespace syllosteer {

struct PlantedConfig {
  std::size_t width = 16;
  int depth = 16;
  int band_lo = 7;   // planted layers, inclusive
  int band_hi = 12;
  double beta = 1.0;  // plausibility leak strength in the readout
  double sigma = 0.5;
  double validity_amplitude = 1.0;
  double plausibility_amplitude = 0.6;
  double readout_bias = -0.35;
  std::uint64_t seed = 0;
  // language-model / OOD side-effect model
  std::size_t vocab_size = 1000;
  double ppl_drift = 0.002;
  double ood_flip_threshold = 1.0;

  int readout_layer() const { return band_hi; }
  int condition_layer() const { return band_lo; }

  void validate() const {
    if (width < 2) throw ConfigError("bench width must be >= 2");
    if (depth < 2) throw ConfigError("bench depth must be >= 2");
    if (band_lo < 0 || band_hi >= depth || band_lo > band_hi)
      throw ConfigError("bench planted band out of range");
    if (sigma <= 0.0) throw ConfigError("bench sigma must be positive");
    if (beta < 0.0) throw ConfigError("bench beta must be non-negative");
    if (vocab_size < 2) throw ConfigError("bench vocab size must be >= 2");
  }

  nlohmann::json to_json() const {
    return {{"width", width},
            {"depth", depth},
            {"band_lo", band_lo},
            {"band_hi", band_hi},
            {"beta", beta},
            {"sigma", sigma},
            {"validity_amplitude", validity_amplitude},
            {"plausibility_amplitude", plausibility_amplitude},
            {"readout_bias", readout_bias},
            {"seed", seed},
            {"vocab_size", vocab_size},
            {"ppl_drift", ppl_drift},
            {"ood_flip_threshold", ood_flip_threshold}};
  }
  static PlantedConfig from_json(const nlohmann::json& j) {
    PlantedConfig c;
    c.width = j.at("width").get<std::size_t>();
    c.depth = j.at("depth").get<int>();
    c.band_lo = j.at("band_lo").get<int>();
    c.band_hi = j.at("band_hi").get<int>();
    c.beta = j.at("beta").get<double>();
    c.sigma = j.at("sigma").get<double>();
    c.validity_amplitude = j.at("validity_amplitude").get<double>();
    c.plausibility_amplitude = j.at("plausibility_amplitude").get<double>();
    c.readout_bias = j.at("readout_bias").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.ppl_drift = j.at("ppl_drift").get<double>();
    c.ood_flip_threshold = j.at("ood_flip_threshold").get<double>();
    c.validate();
    return c;
  }
};

// Spec'd readout shape: sign((v + beta*p) . phi + bias), exact zero -> VALID.
inline Prediction biased_readout(std::span<const double> phi, std::span<const double> v,
                                 std::span<const double> p, double beta, double bias = 0.0) {
  if (phi.size() != v.size() || phi.size() != p.size())
    throw DataError("biased_readout: width mismatch");
  double score = bias;
  for (std::size_t i = 0; i < phi.size(); ++i) score += (v[i] + beta * p[i]) * phi[i];
  return score >= 0.0 ? Prediction::Valid : Prediction::Invalid;
}

// Directions and per-(instance, layer) activation synthesis.
class PlantedGeometry {
 public:
  explicit PlantedGeometry(const PlantedConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xd17ec7));
    v_ = random_unit(rng, cfg.width);
    // orthonormalize p against v
    for (int tries = 0;; ++tries) {
      p_ = random_unit(rng, cfg.width);
      const double proj = dot(p_, v_);
      for (std::size_t i = 0; i < p_.size(); ++i) p_[i] -= proj * v_[i];
      const double n = norm(p_);
      if (n > 1e-6) {
        for (auto& x : p_) x /= n;
        break;
      }
      if (tries > 16) throw DataError("failed to draw an orthogonal plausibility direction");
    }
    if (std::abs(dot(v_, p_)) > 1e-9) throw DataError("planted directions not orthogonal");
    w_.resize(cfg.width);
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = v_[i] + cfg.beta * p_[i];
  }

  const PlantedConfig& config() const { return cfg_; }
  const std::vector<double>& v() const { return v_; }
  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& readout_direction() const { return w_; }

  bool planted(int layer) const { return layer >= cfg_.band_lo && layer <= cfg_.band_hi; }

  // s_val/s_pls in {-1, 0, +1}; 0 drops the component (used for non-argument
  // inputs). Noise is keyed by (seed, instance_key, layer).
  std::vector<double> base_activation(std::uint64_t instance_key, int layer, int s_val,
                                      int s_pls) const {
    std::mt19937_64 rng(derive_seed(cfg_.seed, instance_key, static_cast<std::uint64_t>(layer)));
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> h(cfg_.width);
    for (auto& x : h) x = cfg_.sigma * g(rng);
    if (planted(layer)) {
      const double av = cfg_.validity_amplitude * s_val;
      const double ap = cfg_.plausibility_amplitude * s_pls;
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += av * v_[i] + ap * p_[i];
    }
    return h;
  }

  double readout_score(std::span<const double> h) const {
    return dot(h, w_) + cfg_.readout_bias;
  }
  Prediction readout(std::span<const double> h) const {
    return readout_score(h) >= 0.0 ? Prediction::Valid : Prediction::Invalid;
  }

 private:
  static std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(d);
    double n = 0.0;
    while (n == 0.0) {
      for (auto& e : x) e = g(rng);
      n = norm(x);
    }
    for (auto& e : x) e /= n;
    return x;
  }

  PlantedConfig cfg_;
  std::vector<double> v_, p_, w_;
};

// ---------------------------------------------------------------------------
// Record generation
// ---------------------------------------------------------------------------

// Balanced validity x plausibility cells; every layer of the model captured.
// Predictions come from the biased readout applied to the float32-serialized
// activation at the readout layer, so replaying from a written store is
// bit-consistent with generation.
inline std::vector<ActivationRecord> generate_planted_records(const PlantedConfig& cfg,
                                                              std::size_t n,
                                                              const std::string& tag = "bench") {
  cfg.validate();
  if (n < 4 || n % 4 != 0)
    throw ConfigError("bench record count must be a positive multiple of 4, got " +
                      std::to_string(n));
  const PlantedGeometry geom(cfg);
  const auto cells = all_cells();

  std::vector<ActivationRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Cell& cell = cells[i % 4];
    const int s_val = cell.validity == Validity::Valid ? 1 : -1;
    const int s_pls = cell.plausibility == Plausibility::Plausible ? 1 : -1;
    const std::uint64_t key = fnv1a64(tag + ":" + std::to_string(i));

    ActivationRecord rec;
    rec.instance_id = tag + "-" + std::to_string(i);
    rec.site = Site::ResidualStream;
    rec.gold_validity = cell.validity;
    rec.gold_plausibility = cell.plausibility;
    for (int layer = 0; layer < cfg.depth; ++layer) {
      rec.layers.push_back(layer);
      const auto h = geom.base_activation(key, layer, s_val, s_pls);
      std::vector<float> row(h.size());
      for (std::size_t j = 0; j < h.size(); ++j) row[j] = static_cast<float>(h[j]);
      rec.vectors.push_back(std::move(row));
    }
    const auto& stored = rec.vector_at(cfg.readout_layer());
    std::vector<double> h(stored.begin(), stored.end());
    rec.prediction = geom.readout(h);
    rec.correct =
        (rec.prediction == Prediction::Valid) == (rec.gold_validity == Validity::Valid);
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompt-driven synthetic backend
// ---------------------------------------------------------------------------

// A model that internally decides validity with the region-model oracle and
// plausibility with the taxonomy, then exposes exactly the planted activation
// geometry and the biased readout. Noise is keyed by the argument's three
// statements, so template variants and ICL framing leave activations
// unchanged.
class PlantedBackend final : public ModelBackend {
 public:
  PlantedBackend(const PlantedConfig& cfg, std::shared_ptr<const Taxonomy> taxonomy)
      : geom_(cfg), taxonomy_(std::move(taxonomy)) {
    if (!taxonomy_) throw ConfigError("planted backend needs a taxonomy");
  }

  std::string name() const override { return "planted"; }
  int depth() const override { return geom_.config().depth; }
  int width() const override { return static_cast<int>(geom_.config().width); }
  const PlantedGeometry& geometry() const { return geom_; }

  RunResult run(const std::string& prompt, const std::string& answer_a,
                const std::string& answer_b, const CaptureSpec* capture,
                const InterventionSpec* intervention) override {
    if (capture) capture->validate(depth());
    if (intervention) intervention->validate(depth(), geom_.config().width);

    const auto statements = scan_statements(prompt);
    if (statements.size() >= 3) {
      return argument_run(statements, answer_a, answer_b, capture, intervention);
    }
    return ood_run(prompt, answer_a, answer_b, capture, intervention);
  }

  double sequence_nll(const std::vector<std::string>& tokens,
                      const InterventionSpec* intervention) override {
    if (tokens.empty()) throw BackendError("planted: empty token sequence");
    double coeff = 0.0;
    if (intervention && !intervention->layers.empty()) {
      const std::vector<double> zero(geom_.config().width, 0.0);
      coeff = resolve_coefficient(intervention->rule, zero);
    }
    // uniform next-token model, perturbed quadratically by steering strength
    return std::log(static_cast<double>(geom_.config().vocab_size)) +
           geom_.config().ppl_drift * coeff * coeff;
  }

 private:
  struct ParsedArgument {
    ConcreteStatement s1, s2, c;
  };

  std::vector<ConcreteStatement> scan_statements(const std::string& prompt) const {
    std::vector<ConcreteStatement> found;
    static const char* starters[3] = {"All ", "No ", "Some "};
    std::size_t pos = 0;
    while (pos < prompt.size()) {
      std::size_t next = std::string::npos;
      for (const char* st : starters) {
        std::size_t p = prompt.find(st, pos);
        // quantifier word must start a token
        while (p != std::string::npos && p > 0 &&
               std::isalpha(static_cast<unsigned char>(prompt[p - 1])))
          p = prompt.find(st, p + 1);
        if (p != std::string::npos) next = std::min(next, p);
      }
      if (next == std::string::npos) break;
      std::size_t end = prompt.find_first_of(".\n", next);
      if (end == std::string::npos) end = prompt.size();
      if (auto st = parse_concrete_statement(prompt.substr(next, end - next), *taxonomy_)) {
        found.push_back(*st);
        pos = end;
      } else {
        pos = next + 1;
      }
    }
    return found;
  }

  RunResult argument_run(const std::vector<ConcreteStatement>& statements,
                         const std::string& answer_a, const std::string& answer_b,
                         const CaptureSpec* capture, const InterventionSpec* intervention) {
    // the query argument is the last three statements (ICL exemplars precede)
    ParsedArgument arg{statements[statements.size() - 3], statements[statements.size() - 2],
                       statements[statements.size() - 1]};

    // map terms to slots by first appearance
    std::vector<std::string> distinct;
    auto slot_for = [&](const std::string& term) -> std::optional<Slot> {
      for (std::size_t i = 0; i < distinct.size(); ++i)
        if (distinct[i] == term) return static_cast<Slot>(i);
      if (distinct.size() == 3) return std::nullopt;
      distinct.push_back(term);
      return static_cast<Slot>(distinct.size() - 1);
    };
    std::array<Statement, 3> abstract{};
    const ConcreteStatement* concrete[3] = {&arg.s1, &arg.s2, &arg.c};
    for (int i = 0; i < 3; ++i) {
      auto subj = slot_for(concrete[i]->subject);
      auto pred = slot_for(concrete[i]->predicate);
      if (!subj || !pred)
        throw BackendError("planted: argument uses more than 3 distinct terms");
      abstract[static_cast<std::size_t>(i)] = Statement{concrete[i]->q, *subj, *pred};
    }

    const Validity validity =
        check_validity({abstract[0], abstract[1], abstract[2]}, /*existential_import=*/true).label;
    const bool plausible =
        statement_plausibility(arg.s1, *taxonomy_) == Plausibility::Plausible &&
        statement_plausibility(arg.s2, *taxonomy_) == Plausibility::Plausible &&
        statement_plausibility(arg.c, *taxonomy_) == Plausibility::Plausible;
    const int s_val = validity == Validity::Valid ? 1 : -1;
    const int s_pls = plausible ? 1 : -1;

    auto canon = [](const ConcreteStatement& s) {
      return std::string(1, quantifier_letter(s.q)) + "|" + s.subject + "|" + s.predicate;
    };
    const std::uint64_t key = fnv1a64(canon(arg.s1) + ";" + canon(arg.s2) + ";" + canon(arg.c));

    return synthesize(key, s_val, s_pls, answer_a, answer_b, capture, intervention);
  }

  RunResult ood_run(const std::string& prompt, const std::string& answer_a,
                    const std::string& answer_b, const CaptureSpec* capture,
                    const InterventionSpec* intervention) {
    const std::uint64_t key = fnv1a64(prompt);
    double coeff = 0.0;
    if (intervention && !intervention->layers.empty()) {
      const auto cond = condition_activation(key, 0, 0, intervention);
      coeff = resolve_coefficient(intervention->rule, cond);
    }
    // pick the answer mentioned in the prompt; hash parity as tie-breaker
    const bool has_a = prompt.find(answer_a) != std::string::npos;
    const bool has_b = prompt.find(answer_b) != std::string::npos;
    bool choose_a = has_a == has_b ? (key & 1) == 0 : has_a;
    // strong steering degrades OOD behavior on half the inputs
    if (std::abs(coeff) > geom_.config().ood_flip_threshold && ((key >> 1) & 1) == 0)
      choose_a = !choose_a;

    RunResult res;
    res.score_a = choose_a ? 1.0 : -1.0;
    res.score_b = -res.score_a;
    res.continuation = " " + (choose_a ? answer_a : answer_b);
    fill_capture(res, key, 0, 0, capture, intervention);
    return res;
  }

  std::vector<double> condition_activation(std::uint64_t key, int s_val, int s_pls,
                                           const InterventionSpec* intervention) const {
    const int cond = rule_condition_layer(intervention->rule);
    if (cond < 0) return {};
    return geom_.base_activation(key, cond, s_val, s_pls);
  }

  // Residual-stream semantics: an addition at layer j persists into every
  // later layer.
  std::vector<double> hidden_at(std::uint64_t key, int layer, int s_val, int s_pls, double coeff,
                                const InterventionSpec* intervention) const {
    auto h = geom_.base_activation(key, layer, s_val, s_pls);
    if (intervention && coeff != 0.0) {
      for (std::size_t i = 0; i < intervention->layers.size(); ++i) {
        if (intervention->layers[i] > layer) break;
        const auto& delta = intervention->deltas[i].values;
        for (std::size_t j = 0; j < h.size(); ++j) h[j] += coeff * delta[j];
      }
    }
    return h;
  }

  void fill_capture(RunResult& res, std::uint64_t key, int s_val, int s_pls,
                    const CaptureSpec* capture, const InterventionSpec* intervention) const {
    if (!capture) return;
    double coeff = 0.0;
    if (intervention && !intervention->layers.empty()) {
      const auto cond = condition_activation(key, s_val, s_pls, intervention);
      coeff = resolve_coefficient(intervention->rule, cond);
    }
    for (int layer : capture->layers) {
      const auto h = hidden_at(key, layer, s_val, s_pls, coeff, intervention);
      std::vector<float> row(h.size());
      for (std::size_t j = 0; j < h.size(); ++j) row[j] = static_cast<float>(h[j]);
      res.activations.push_back(std::move(row));
    }
  }

  RunResult synthesize(std::uint64_t key, int s_val, int s_pls, const std::string& answer_a,
                       const std::string& answer_b, const CaptureSpec* capture,
                       const InterventionSpec* intervention) {
    double coeff = 0.0;
    if (intervention && !intervention->layers.empty()) {
      const auto cond = condition_activation(key, s_val, s_pls, intervention);
      coeff = resolve_coefficient(intervention->rule, cond);
    }
    const auto h = hidden_at(key, geom_.config().readout_layer(), s_val, s_pls, coeff,
                             intervention);
    const double score = geom_.readout_score(h);

    RunResult res;
    const bool a_is_valid = to_lower(answer_a) == kAnswerValid;
    const bool b_is_valid = to_lower(answer_b) == kAnswerValid;
    if (a_is_valid == b_is_valid)
      throw BackendError("planted: expected one 'valid' and one 'invalid' answer string");
    res.score_a = a_is_valid ? score : -score;
    res.score_b = -res.score_a;
    res.continuation = score >= 0.0 ? " valid" : " invalid";
    fill_capture(res, key, s_val, s_pls, capture, intervention);
    return res;
  }

  PlantedGeometry geom_;
  std::shared_ptr<const Taxonomy> taxonomy_;
};

// ---------------------------------------------------------------------------
// Store replay
// ---------------------------------------------------------------------------

// Evaluates interventions directly against a written bench store: the stored
// activation at the readout layer plus the accumulated intervention shift is
// run through the same biased readout. Conditional rules read the stored
// condition-layer activation, exactly as the one-pass backend would.
class PlantedReplay {
 public:
  explicit PlantedReplay(const PlantedConfig& cfg) : geom_(cfg) {}

  const PlantedGeometry& geometry() const { return geom_; }

  Prediction predict(const ActivationRecord& rec, const InterventionSpec* intervention) const {
    const auto& stored = rec.vector_at(geom_.config().readout_layer());
    std::vector<double> h(stored.begin(), stored.end());
    if (intervention && !intervention->layers.empty()) {
      intervention->validate(geom_.config().depth, geom_.config().width);
      std::vector<double> cond;
      const int cond_layer = rule_condition_layer(intervention->rule);
      if (cond_layer >= 0) {
        const auto& cv = rec.vector_at(cond_layer);
        cond.assign(cv.begin(), cv.end());
      }
      const double coeff = resolve_coefficient(intervention->rule, cond);
      for (std::size_t i = 0; i < intervention->layers.size(); ++i) {
        if (intervention->layers[i] > geom_.config().readout_layer()) break;
        const auto& delta = intervention->deltas[i].values;
        for (std::size_t j = 0; j < h.size(); ++j) h[j] += coeff * delta[j];
      }
    }
    return geom_.readout(h);
  }

 private:
  PlantedGeometry geom_;
};

}  // namespace syllosteer
