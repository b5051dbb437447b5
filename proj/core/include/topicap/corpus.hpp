#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace topicap {

inline constexpr const char* kEosToken = "<eos>";
inline constexpr const char* kBosToken = "<bos>";
inline constexpr const char* kUnkToken = "<unk>";

enum class ConceptKind { kObject, kAction, kScene };
enum class Split { kTrain, kVal, kTest };

std::string to_string(ConceptKind kind);
std::string to_string(Split split);
ConceptKind concept_kind_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct Concept {
  int id = 0;
  ConceptKind kind = ConceptKind::kObject;
  std::string name;
  std::vector<std::string> words;  // 3-6 surface words, disjoint across concepts

  friend bool operator==(const Concept&, const Concept&) = default;
};

// Default catalogue: 5 objects, 4 actions, 3 scenes.
std::vector<Concept> default_concepts();

struct DatasetConfig {
  int train_videos = 200;
  int val_videos = 40;
  int test_videos = 60;
  int frames = 8;
  int feature_dim = 16;
  int descriptions_per_video = 5;
  double noise_sigma = 0.1;
  double concept_scale = 1.0;
  int min_action_window = 3;
  int max_action_window = 6;
  double scene_probability = 0.7;
  double second_object_probability = 0.25;
  std::vector<Concept> concepts = default_concepts();

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  DatasetConfig config;

  int count(Split split) const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct SyntheticVideo {
  std::string id;
  Split split = Split::kTrain;
  std::vector<std::vector<double>> frames;       // n x d_in
  std::vector<std::vector<int>> frame_concepts;  // concept ids present in each frame
  std::vector<int> active_concepts;              // sorted
  int action_label = 0;
  std::vector<std::string> descriptions;

  friend bool operator==(const SyntheticVideo&, const SyntheticVideo&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<SyntheticVideo> videos;

  std::vector<const SyntheticVideo*> split(Split s) const;
  const SyntheticVideo& find(const std::string& id) const;  // NotFoundError
  const Concept& concept_by_id(int id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Which concepts appear in a single video and how strongly. Used by the
// generator and to plant failure cases with an attenuated concept.
struct VideoPlan {
  std::vector<int> objects;
  int action = 0;
  std::optional<int> scene;
  int window_start = 0;
  int window_length = 1;
  // concept id -> multiplier on its embedding (1 when absent).
  std::vector<std::pair<int, double>> attenuation;
};

// Orthogonalised random concept embeddings (rows), scaled by concept_scale.
std::vector<std::vector<double>> concept_embeddings(const DatasetManifest& manifest);

Dataset generate_dataset(const DatasetConfig& config, std::uint64_t seed);

// Renders one video from a plan. Frames, descriptions and noise all draw from `seed`.
SyntheticVideo render_video(const DatasetManifest& manifest,
                            const std::vector<std::vector<double>>& embeddings,
                            const VideoPlan& plan, std::string id, Split split,
                            std::uint64_t seed);

// Random plan following the generator's sampling rules.
VideoPlan sample_plan(const DatasetConfig& config, std::mt19937_64& rng);

// Lowercases, strips punctuation, splits on whitespace. Appends kEosToken to a
// non-empty result when `append_eos` is set.
std::vector<std::string> tokenize(std::string_view sentence, bool append_eos = true);

nlohmann::json to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetConfig& config);
// Applies any keys present in `j` on top of `base`.
DatasetConfig dataset_config_from_json(const nlohmann::json& j, DatasetConfig base = {});

// Deterministic 64-bit stream derivation (splitmix64 of seed and index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace topicap
