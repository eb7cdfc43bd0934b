#pragma once

// Contrastive steering vectors, condition vectors for gated interventions,
// and the kNN condition memory. Sign conventions: alpha magnitudes are
// non-negative everywhere; the dual-condition rule and the kNN rule own all
// sign logic, so a resolved coefficient is the only signed quantity.

#include <span>
#include <string>
#include <vector>

#include "syllosteer/math.hpp"
#include "syllosteer/store.hpp"

namespace syllosteer {

struct SteeringVector {
  int layer = 0;
  std::vector<double> values;
  std::size_t n_positive = 0;  // records behind the positive mean
  std::size_t n_negative = 0;

  void validate() const {
    if (n_positive == 0 || n_negative == 0)
      throw DataError("steering vector needs records on both sides");
    for (double v : values)
      if (!std::isfinite(v)) throw DataError("steering vector has non-finite entries");
  }
};

enum class ConditionConstruction : std::uint8_t { Mean, PcaFirstComponent };

inline const char* to_string(ConditionConstruction c) {
  return c == ConditionConstruction::Mean ? "mean" : "pca_first_component";
}
inline ConditionConstruction condition_construction_from_string(const std::string& s) {
  if (s == "mean") return ConditionConstruction::Mean;
  if (s == "pca" || s == "pca_first_component") return ConditionConstruction::PcaFirstComponent;
  throw ConfigError("unknown condition construction: " + s);
}

struct ConditionVector {
  int layer = 0;
  std::vector<double> values;
  ConditionConstruction construction = ConditionConstruction::Mean;
  std::size_t n_records = 0;
};

// ---------------------------------------------------------------------------
// Vector computation
// ---------------------------------------------------------------------------

namespace detail {
inline std::vector<double> mean_of(const std::vector<const ActivationRecord*>& records,
                                   int layer) {
  std::vector<double> mean(records.front()->vector_at(layer).size(), 0.0);
  for (const auto* r : records) {
    const auto& v = r->vector_at(layer);
    if (v.size() != mean.size()) throw DataError("activation width mismatch across records");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
  }
  for (auto& m : mean) m /= static_cast<double>(records.size());
  return mean;
}

// Equal-weight average of per-cell means; cells with no records are skipped.
inline std::vector<double> balanced_mean_of(const std::vector<const ActivationRecord*>& records,
                                            int layer) {
  std::vector<double> total;
  int cells_used = 0;
  for (const Cell& cell : all_cells()) {
    std::vector<const ActivationRecord*> in_cell;
    for (const auto* r : records)
      if (r->gold_validity == cell.validity && r->gold_plausibility == cell.plausibility)
        in_cell.push_back(r);
    if (in_cell.empty()) continue;
    auto m = mean_of(in_cell, layer);
    if (total.empty()) total.assign(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) total[i] += m[i];
    ++cells_used;
  }
  for (auto& t : total) t /= static_cast<double>(cells_used);
  return total;
}
}  // namespace detail

// Delta-phi at one layer: mean activation of records with correct predictions
// minus mean activation of the incorrect ones.
inline SteeringVector compute_caa_vector(const std::vector<ActivationRecord>& records, int layer,
                                         bool balance_cells = false) {
  std::vector<const ActivationRecord*> pos, neg;
  for (const auto& r : records) {
    if (!r.has_layer(layer)) continue;
    (r.correct ? pos : neg).push_back(&r);
  }
  if (pos.empty()) throw DataError("no correctly-predicted records at layer " +
                                   std::to_string(layer) + " (positive side empty)");
  if (neg.empty()) throw DataError("no incorrectly-predicted records at layer " +
                                   std::to_string(layer) + " (negative side empty)");

  const auto mu_pos = balance_cells ? detail::balanced_mean_of(pos, layer)
                                    : detail::mean_of(pos, layer);
  const auto mu_neg = balance_cells ? detail::balanced_mean_of(neg, layer)
                                    : detail::mean_of(neg, layer);
  SteeringVector out;
  out.layer = layer;
  out.n_positive = pos.size();
  out.n_negative = neg.size();
  out.values.resize(mu_pos.size());
  for (std::size_t i = 0; i < mu_pos.size(); ++i) out.values[i] = mu_pos[i] - mu_neg[i];
  out.validate();
  return out;
}

// Aggregates one class's activations into a condition vector. PCA mode takes
// the first principal component of the centered activations, sign-fixed so
// that it points with the centroid.
inline ConditionVector compute_condition_vector(const std::vector<std::vector<double>>& activations,
                                                ConditionConstruction mode, int layer) {
  if (activations.empty()) throw DataError("condition vector needs at least one record");
  ConditionVector out;
  out.layer = layer;
  out.construction = mode;
  out.n_records = activations.size();

  std::vector<double> centroid(activations.front().size(), 0.0);
  for (const auto& a : activations) {
    if (a.size() != centroid.size()) throw DataError("activation width mismatch");
    for (std::size_t i = 0; i < centroid.size(); ++i) centroid[i] += a[i];
  }
  for (auto& c : centroid) c /= static_cast<double>(activations.size());

  if (mode == ConditionConstruction::Mean) {
    out.values = std::move(centroid);
  } else {
    if (activations.size() < 2) throw DataError("pca condition vector needs at least 2 records");
    out.values = first_principal_component(activations);
    if (dot(out.values, centroid) < 0.0)
      for (auto& v : out.values) v = -v;
  }
  if (norm(out.values) == 0.0) throw DataError("condition vector has zero norm");
  return out;
}

inline std::vector<std::vector<double>> activations_at(
    const std::vector<ActivationRecord>& records, int layer) {
  std::vector<std::vector<double>> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto& v = r.vector_at(layer);
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Similarity and signed-alpha rules
// ---------------------------------------------------------------------------

// Cosine between phi and its projection onto psi. The projection is +-|cos|
// collinear with phi's psi-component, so this reduces to |cos(phi, psi)|;
// the signed variant keeps the raw cosine instead.
inline double projection_similarity(std::span<const double> phi, std::span<const double> psi,
                                    bool signed_cosine = false) {
  if (norm(psi) == 0.0) throw DataError("projection similarity against a zero condition vector");
  const double c = cosine(phi, psi);  // 0 when phi or the projection vanishes
  return signed_cosine ? c : std::abs(c);
}

// Dual-condition rule: -alpha when the input looks like the positive
// condition, +alpha otherwise (ties included).
inline double cast_alpha(std::span<const double> phi, const ConditionVector& psi_plus,
                         const ConditionVector& psi_minus, double alpha,
                         bool signed_cosine = false) {
  if (alpha < 0.0) throw ConfigError("alpha magnitude must be non-negative");
  const double sim_plus = projection_similarity(phi, psi_plus.values, signed_cosine);
  const double sim_minus = projection_similarity(phi, psi_minus.values, signed_cosine);
  return sim_plus > sim_minus ? -alpha : alpha;
}

// ---------------------------------------------------------------------------
// kNN condition memory
// ---------------------------------------------------------------------------

class KnnConditionModel {
 public:
  // labels are +1 (condition present, e.g. formally valid) or -1.
  KnnConditionModel(std::vector<std::vector<double>> points, std::vector<int> labels, int k,
                    int layer)
      : k_(k), layer_(layer) {
    if (points.empty() || points.size() != labels.size())
      throw DataError("knn model: points/labels size mismatch");
    if (k <= 0 || k % 2 == 0)
      throw ConfigError("knn k must be odd and positive, got " + std::to_string(k));
    if (static_cast<std::size_t>(k) > points.size())
      throw ConfigError("knn k exceeds the number of stored points");
    width_ = points.front().size();
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != width_) throw DataError("knn model: width mismatch");
      if (labels[i] == 1) has_pos = true;
      else if (labels[i] == -1) has_neg = true;
      else throw DataError("knn labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw DataError("knn model needs both condition labels");
    labels_.assign(labels.begin(), labels.end());
    data_.reserve(points.size() * width_);
    norms_.reserve(points.size());
    for (const auto& p : points) {
      data_.insert(data_.end(), p.begin(), p.end());
      norms_.push_back(norm(p));
    }
  }

  int k() const { return k_; }
  int layer() const { return layer_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t width() const { return width_; }
  std::span<const double> point(std::size_t i) const { return {&data_[i * width_], width_}; }
  int label(std::size_t i) const { return labels_[i]; }

  // Majority label among the k cosine-nearest stored points. k odd means the
  // sum cannot be zero.
  int classify(std::span<const double> query) const {
    const double qn = norm(query);
    std::vector<std::pair<double, std::size_t>> sims(size());
    for (std::size_t i = 0; i < size(); ++i) {
      double s = 0.0;
      if (qn != 0.0 && norms_[i] != 0.0) s = dot(query, point(i)) / (qn * norms_[i]);
      sims[i] = {s, i};
    }
    std::partial_sort(sims.begin(), sims.begin() + k_, sims.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;  // deterministic tie order
                      });
    int sum = 0;
    for (int i = 0; i < k_; ++i) sum += labels_[sims[static_cast<std::size_t>(i)].second];
    return sum > 0 ? 1 : -1;
  }

 private:
  std::vector<double> data_;
  std::vector<double> norms_;
  std::vector<std::int8_t> labels_;
  std::size_t width_ = 0;
  int k_;
  int layer_;
};

inline int knn_condition(std::span<const double> phi, const KnnConditionModel& model) {
  return model.classify(phi);
}

// phi_tilde = phi - yhat * alpha * delta, i.e. coefficient -yhat*alpha, so a
// predicted-valid input gets -alpha exactly as the dual-condition rule would.
inline double knn_alpha(int yhat, double alpha) {
  if (alpha < 0.0) throw ConfigError("alpha magnitude must be non-negative");
  return -static_cast<double>(yhat) * alpha;
}

// The intervention itself; exact affine update, no renormalization.
inline std::vector<double> apply_steering(std::span<const double> phi,
                                          std::span<const double> delta, double signed_alpha) {
  if (phi.size() != delta.size())
    throw DataError("apply_steering: width mismatch (" + std::to_string(phi.size()) + " vs " +
                    std::to_string(delta.size()) + ")");
  std::vector<double> out(phi.begin(), phi.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += signed_alpha * delta[i];
  return out;
}

// ---------------------------------------------------------------------------
// Vector artifacts (activation-store binary convention + JSON descriptor)
// ---------------------------------------------------------------------------

struct VectorArtifacts {
  std::vector<SteeringVector> steering;  // one per intervention layer
  std::optional<ConditionVector> psi_plus, psi_minus;
  std::optional<KnnConditionModel> knn;
  std::string config_hash, dataset_hash;
};

namespace detail {
inline void write_rows_f32(const std::filesystem::path& path,
                           const std::vector<std::vector<double>>& rows) {
  std::string blob;
  for (const auto& row : rows) {
    for (double v : row) {
      const float f = static_cast<float>(v);
      const std::size_t pos = blob.size();
      blob.resize(pos + sizeof(float));
      std::memcpy(blob.data() + pos, &f, sizeof(float));
    }
  }
  write_text_file(path, blob);
}

inline std::vector<std::vector<double>> read_rows_f32(const std::filesystem::path& path,
                                                      std::size_t n_rows, std::size_t width) {
  const std::string blob = read_text_file(path);
  if (blob.size() != n_rows * width * sizeof(float))
    throw DataError(path.string() + ": blob size does not match descriptor");
  std::vector<std::vector<double>> rows(n_rows, std::vector<double>(width));
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      float f;
      std::memcpy(&f, blob.data() + (r * width + c) * sizeof(float), sizeof(float));
      rows[r][c] = f;
    }
  return rows;
}
}  // namespace detail

inline void write_vector_artifacts(const std::filesystem::path& dir, const VectorArtifacts& va) {
  if (va.steering.empty()) throw DataError("no steering vectors to write");
  std::filesystem::create_directories(dir);
  const std::size_t width = va.steering.front().values.size();

  {
    std::vector<std::vector<double>> rows;
    nlohmann::json prov = nlohmann::json::array();
    std::vector<int> layers;
    for (const auto& sv : va.steering) {
      rows.push_back(sv.values);
      layers.push_back(sv.layer);
      prov.push_back({{"layer", sv.layer},
                      {"n_positive", sv.n_positive},
                      {"n_negative", sv.n_negative}});
    }
    detail::write_rows_f32(dir / "steering.bin", rows);
    nlohmann::json desc = {{"kind", "caa_steering"},   {"layers", layers},
                           {"width", width},           {"provenance", prov},
                           {"config_hash", va.config_hash}, {"dataset_hash", va.dataset_hash}};
    write_text_file(dir / "steering.json", desc.dump(2) + "\n");
  }
  if (va.psi_plus && va.psi_minus) {
    detail::write_rows_f32(dir / "condition.bin", {va.psi_plus->values, va.psi_minus->values});
    nlohmann::json desc = {{"kind", "cast_condition"},
                           {"layer", va.psi_plus->layer},
                           {"width", width},
                           {"construction", to_string(va.psi_plus->construction)},
                           {"n_plus", va.psi_plus->n_records},
                           {"n_minus", va.psi_minus->n_records},
                           {"config_hash", va.config_hash},
                           {"dataset_hash", va.dataset_hash}};
    write_text_file(dir / "condition.json", desc.dump(2) + "\n");
  }
  if (va.knn) {
    std::vector<std::vector<double>> rows;
    nlohmann::json labels = nlohmann::json::array();
    for (std::size_t i = 0; i < va.knn->size(); ++i) {
      const auto p = va.knn->point(i);
      rows.emplace_back(p.begin(), p.end());
      labels.push_back(va.knn->label(i));
    }
    detail::write_rows_f32(dir / "knn.bin", rows);
    nlohmann::json desc = {{"kind", "knn_condition"}, {"layer", va.knn->layer()},
                           {"width", va.knn->width()}, {"k", va.knn->k()},
                           {"labels", labels},         {"config_hash", va.config_hash},
                           {"dataset_hash", va.dataset_hash}};
    write_text_file(dir / "knn.json", desc.dump(2) + "\n");
  }
}

inline VectorArtifacts read_vector_artifacts(const std::filesystem::path& dir) {
  VectorArtifacts va;
  {
    const auto desc = nlohmann::json::parse(read_text_file(dir / "steering.json"));
    const auto layers = desc.at("layers").get<std::vector<int>>();
    const auto width = desc.at("width").get<std::size_t>();
    va.config_hash = desc.value("config_hash", std::string{});
    va.dataset_hash = desc.value("dataset_hash", std::string{});
    auto rows = detail::read_rows_f32(dir / "steering.bin", layers.size(), width);
    const auto& prov = desc.at("provenance");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      SteeringVector sv;
      sv.layer = layers[i];
      sv.values = std::move(rows[i]);
      sv.n_positive = prov[i].at("n_positive").get<std::size_t>();
      sv.n_negative = prov[i].at("n_negative").get<std::size_t>();
      va.steering.push_back(std::move(sv));
    }
  }
  if (std::filesystem::exists(dir / "condition.json")) {
    const auto desc = nlohmann::json::parse(read_text_file(dir / "condition.json"));
    const auto width = desc.at("width").get<std::size_t>();
    auto rows = detail::read_rows_f32(dir / "condition.bin", 2, width);
    ConditionVector plus, minus;
    plus.layer = minus.layer = desc.at("layer").get<int>();
    plus.construction = minus.construction =
        condition_construction_from_string(desc.at("construction").get<std::string>());
    plus.values = std::move(rows[0]);
    minus.values = std::move(rows[1]);
    plus.n_records = desc.at("n_plus").get<std::size_t>();
    minus.n_records = desc.at("n_minus").get<std::size_t>();
    va.psi_plus = std::move(plus);
    va.psi_minus = std::move(minus);
  }
  if (std::filesystem::exists(dir / "knn.json")) {
    const auto desc = nlohmann::json::parse(read_text_file(dir / "knn.json"));
    const auto width = desc.at("width").get<std::size_t>();
    const auto labels = desc.at("labels").get<std::vector<int>>();
    auto rows = detail::read_rows_f32(dir / "knn.bin", labels.size(), width);
    va.knn.emplace(std::move(rows), labels, desc.at("k").get<int>(), desc.at("layer").get<int>());
  }
  return va;
}

}  // namespace syllosteer
