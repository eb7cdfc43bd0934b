#pragma once

// Activation stores: a directory holding manifest.jsonl (one record's
// metadata per line, including byte offsets), activations.bin (little-endian
// float32, row-major, one row per (record, layer) in manifest order) and
// meta.json (store-level metadata, config/dataset hashes included).

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "syllosteer/prompts.hpp"

namespace syllosteer {

enum class Site : std::uint8_t { ResidualStream, AttentionOut, MlpOut };

inline const char* to_string(Site s) {
  switch (s) {
    case Site::ResidualStream: return "residual_stream";
    case Site::AttentionOut: return "attention_out";
    case Site::MlpOut: return "mlp_out";
  }
  return "?";
}
inline Site site_from_string(const std::string& s) {
  if (s == "residual_stream") return Site::ResidualStream;
  if (s == "attention_out") return Site::AttentionOut;
  if (s == "mlp_out") return Site::MlpOut;
  throw ConfigError("unknown capture site: " + s);
}

struct ActivationRecord {
  std::string instance_id;
  int prompt_variant = 0;
  Site site = Site::ResidualStream;
  std::vector<int> layers;                  // ascending
  std::vector<std::vector<float>> vectors;  // one per layer
  Prediction prediction = Prediction::Unparseable;
  Validity gold_validity = Validity::Valid;
  Plausibility gold_plausibility = Plausibility::Plausible;
  bool correct = false;

  std::size_t width() const { return vectors.empty() ? 0 : vectors.front().size(); }

  const std::vector<float>& vector_at(int layer) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i] == layer) return vectors[i];
    throw DataError("record " + instance_id + " has no activation for layer " +
                    std::to_string(layer));
  }
  bool has_layer(int layer) const {
    for (int l : layers)
      if (l == layer) return true;
    return false;
  }

  bool operator==(const ActivationRecord&) const = default;
};

struct StoreMeta {
  std::string schema = "syllosteer-store-v1";
  std::size_t width = 0;
  std::string backend;
  std::string device;
  std::string config_hash;
  std::string dataset_hash;
  nlohmann::json extra = nlohmann::json::object();
};

namespace detail {

inline nlohmann::json record_manifest_json(const ActivationRecord& r, std::uint64_t row_offset) {
  return {{"instance_id", r.instance_id},
          {"prompt_variant", r.prompt_variant},
          {"site", to_string(r.site)},
          {"layers", r.layers},
          {"prediction", to_string(r.prediction)},
          {"gold_validity", to_string(r.gold_validity)},
          {"gold_plausibility", to_string(r.gold_plausibility)},
          {"correct", r.correct},
          {"width", r.width()},
          {"n_rows", r.layers.size()},
          {"row_offset", row_offset}};
}

}  // namespace detail

inline void write_store(const std::filesystem::path& dir,
                        const std::vector<ActivationRecord>& records, const StoreMeta& meta) {
  if (records.empty()) throw DataError("refusing to write an empty activation store");
  const std::size_t width = records.front().width();
  for (const auto& r : records) {
    if (r.layers.size() != r.vectors.size())
      throw DataError("record " + r.instance_id + ": layer/vector count mismatch");
    for (const auto& v : r.vectors)
      if (v.size() != width)
        throw DataError("record " + r.instance_id + ": activation width mismatch");
  }

  std::filesystem::create_directories(dir);
  std::string manifest;
  std::string blob;
  std::uint64_t offset = 0;
  for (const auto& r : records) {
    manifest += detail::record_manifest_json(r, offset).dump();
    manifest += '\n';
    for (const auto& v : r.vectors) {
      const std::size_t bytes = v.size() * sizeof(float);
      const std::size_t pos = blob.size();
      blob.resize(pos + bytes);
      std::memcpy(blob.data() + pos, v.data(), bytes);
      offset += bytes;
    }
  }
  write_text_file(dir / "manifest.jsonl", manifest);
  write_text_file(dir / "activations.bin", blob);

  nlohmann::json m = {{"schema", meta.schema},   {"width", width},
                      {"backend", meta.backend}, {"device", meta.device},
                      {"config_hash", meta.config_hash}, {"dataset_hash", meta.dataset_hash},
                      {"records", records.size()}, {"extra", meta.extra}};
  write_text_file(dir / "meta.json", m.dump(2) + "\n");
}

inline std::pair<std::vector<ActivationRecord>, StoreMeta> read_store(
    const std::filesystem::path& dir) {
  const std::string blob = read_text_file(dir / "activations.bin");
  StoreMeta meta;
  {
    const auto j = nlohmann::json::parse(read_text_file(dir / "meta.json"));
    meta.schema = j.value("schema", std::string{});
    meta.width = j.value("width", std::size_t{0});
    meta.backend = j.value("backend", std::string{});
    meta.device = j.value("device", std::string{});
    meta.config_hash = j.value("config_hash", std::string{});
    meta.dataset_hash = j.value("dataset_hash", std::string{});
    meta.extra = j.value("extra", nlohmann::json::object());
  }

  std::vector<ActivationRecord> records;
  std::uint64_t expected_offset = 0;
  int line_no = 0;
  for (const auto& line : read_lines(dir / "manifest.jsonl")) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(dir.string() + "/manifest.jsonl:" + std::to_string(line_no) + ": " +
                      e.what());
    }
    ActivationRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.prompt_variant = j.at("prompt_variant").get<int>();
    r.site = site_from_string(j.at("site").get<std::string>());
    r.layers = j.at("layers").get<std::vector<int>>();
    r.prediction = prediction_from_string(j.at("prediction").get<std::string>());
    r.gold_validity = validity_from_string(j.at("gold_validity").get<std::string>());
    r.gold_plausibility = plausibility_from_string(j.at("gold_plausibility").get<std::string>());
    r.correct = j.at("correct").get<bool>();
    const auto width = j.at("width").get<std::size_t>();
    const auto n_rows = j.at("n_rows").get<std::size_t>();
    const auto row_offset = j.at("row_offset").get<std::uint64_t>();

    if (n_rows != r.layers.size())
      throw DataError("store corruption: manifest row count mismatch for " + r.instance_id);
    if (row_offset != expected_offset)
      throw DataError("store corruption: non-contiguous row offset for " + r.instance_id);
    const std::uint64_t bytes = n_rows * width * sizeof(float);
    if (row_offset + bytes > blob.size())
      throw DataError("store corruption: activations.bin shorter than manifest claims (record " +
                      r.instance_id + ")");
    r.vectors.resize(n_rows, std::vector<float>(width));
    for (std::size_t i = 0; i < n_rows; ++i)
      std::memcpy(r.vectors[i].data(), blob.data() + row_offset + i * width * sizeof(float),
                  width * sizeof(float));
    expected_offset = row_offset + bytes;
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(dir.string() + ": store has no records");
  if (expected_offset != blob.size())
    throw DataError("store corruption: activations.bin has " +
                    std::to_string(blob.size() - expected_offset) + " trailing bytes");
  return {std::move(records), std::move(meta)};
}

// NaN/Inf audit, part of the round-trip contract.
inline bool store_is_finite(const std::vector<ActivationRecord>& records) {
  for (const auto& r : records)
    for (const auto& v : r.vectors)
      for (float x : v)
        if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace syllosteer
