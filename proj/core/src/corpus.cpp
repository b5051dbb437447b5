#include "topicap/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <set>

#include "topicap/errors.hpp"

namespace topicap {

std::string to_string(ConceptKind kind) {
  switch (kind) {
    case ConceptKind::kObject: return "object";
    case ConceptKind::kAction: return "action";
    case ConceptKind::kScene: return "scene";
  }
  return "object";
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

ConceptKind concept_kind_from_string(const std::string& s) {
  if (s == "object") return ConceptKind::kObject;
  if (s == "action") return ConceptKind::kAction;
  if (s == "scene") return ConceptKind::kScene;
  throw ConfigError("unknown concept kind '" + s + "'");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "'");
}

std::vector<Concept> default_concepts() {
  using K = ConceptKind;
  return {
      {0, K::kObject, "dog", {"dog", "puppy", "hound", "pup"}},
      {1, K::kObject, "cat", {"cat", "kitten", "kitty"}},
      {2, K::kObject, "man", {"man", "guy", "gentleman", "fellow"}},
      {3, K::kObject, "woman", {"woman", "lady", "girl"}},
      {4, K::kObject, "horse", {"horse", "pony", "stallion"}},
      {5, K::kAction, "dance", {"dancing", "twirling", "spinning"}},
      {6, K::kAction, "eat", {"eating", "chewing", "munching"}},
      {7, K::kAction, "walk", {"walking", "strolling", "wandering"}},
      {8, K::kAction, "play", {"playing", "jumping", "running"}},
      {9, K::kScene, "field", {"field", "grass", "meadow", "yard"}},
      {10, K::kScene, "kitchen", {"kitchen", "counter", "table"}},
      {11, K::kScene, "street", {"street", "road", "sidewalk"}},
  };
}

int DatasetManifest::count(Split split) const {
  switch (split) {
    case Split::kTrain: return config.train_videos;
    case Split::kVal: return config.val_videos;
    case Split::kTest: return config.test_videos;
  }
  return 0;
}

std::vector<const SyntheticVideo*> Dataset::split(Split s) const {
  std::vector<const SyntheticVideo*> out;
  for (const auto& v : videos) {
    if (v.split == s) out.push_back(&v);
  }
  return out;
}

const SyntheticVideo& Dataset::find(const std::string& id) const {
  for (const auto& v : videos) {
    if (v.id == id) return v;
  }
  throw NotFoundError("no video with id '" + id + "'");
}

const Concept& Dataset::concept_by_id(int id) const {
  for (const auto& c : manifest.config.concepts) {
    if (c.id == id) return c;
  }
  throw NotFoundError("no concept with id " + std::to_string(id));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<int> ids_of_kind(const DatasetConfig& config, ConceptKind kind) {
  std::vector<int> out;
  for (const auto& c : config.concepts) {
    if (c.kind == kind) out.push_back(c.id);
  }
  return out;
}

void validate(const DatasetConfig& config) {
  if (config.frames < 1) throw ConfigError("frames must be >= 1");
  if (config.descriptions_per_video < 1) throw ConfigError("descriptions_per_video must be >= 1");
  if (config.train_videos < 0 || config.val_videos < 0 || config.test_videos < 0) {
    throw ConfigError("split counts must be nonnegative");
  }
  if (config.noise_sigma < 0) throw ConfigError("noise_sigma must be >= 0");
  for (auto kind : {ConceptKind::kObject, ConceptKind::kAction, ConceptKind::kScene}) {
    if (ids_of_kind(config, kind).size() < 2) {
      throw ConfigError("need at least 2 concepts of kind '" + to_string(kind) + "'");
    }
  }
  if (config.feature_dim < static_cast<int>(config.concepts.size())) {
    throw ConfigError("feature_dim (" + std::to_string(config.feature_dim) +
                      ") must be >= number of concepts (" +
                      std::to_string(config.concepts.size()) + ")");
  }
  if (config.min_action_window < 1 || config.max_action_window < config.min_action_window) {
    throw ConfigError("invalid action window bounds");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < config.concepts.size(); ++i) {
    const auto& c = config.concepts[i];
    if (c.id != static_cast<int>(i)) throw ConfigError("concept ids must be 0..C-1 in order");
    if (c.words.size() < 3 || c.words.size() > 6) {
      throw ConfigError("concept '" + c.name + "' must have 3-6 surface words");
    }
    for (const auto& w : c.words) {
      if (!seen.insert(w).second) throw ConfigError("surface word '" + w + "' shared by two concepts");
    }
  }
}

template <typename T>
const T& choose(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
  return items[pick(rng)];
}

}  // namespace

std::vector<std::vector<double>> concept_embeddings(const DatasetManifest& manifest) {
  const auto& config = manifest.config;
  const std::size_t c = config.concepts.size();
  const std::size_t d = static_cast<std::size_t>(config.feature_dim);
  std::mt19937_64 rng(derive_seed(manifest.seed, 0xE3BEDULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  basis.reserve(c);
  // Gram-Schmidt on Gaussian draws; resample on (measure-zero) degeneracy.
  while (basis.size() < c) {
    std::vector<double> v(d);
    for (auto& x : v) x = normal(rng);
    for (const auto& b : basis) {
      double p = 0.0;
      for (std::size_t i = 0; i < d; ++i) p += v[i] * b[i];
      for (std::size_t i = 0; i < d; ++i) v[i] -= p * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  for (auto& b : basis) {
    for (auto& x : b) x *= config.concept_scale;
  }
  return basis;
}

VideoPlan sample_plan(const DatasetConfig& config, std::mt19937_64& rng) {
  const auto objects = ids_of_kind(config, ConceptKind::kObject);
  const auto actions = ids_of_kind(config, ConceptKind::kAction);
  const auto scenes = ids_of_kind(config, ConceptKind::kScene);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  VideoPlan plan;
  plan.objects.push_back(choose(objects, rng));
  plan.action = choose(actions, rng);
  if (unit(rng) < config.scene_probability) plan.scene = choose(scenes, rng);
  if (unit(rng) < config.second_object_probability) {
    int other = choose(objects, rng);
    while (other == plan.objects.front()) other = choose(objects, rng);
    plan.objects.push_back(other);
  }
  const int max_len = std::min(config.max_action_window, config.frames);
  const int min_len = std::min(config.min_action_window, max_len);
  std::uniform_int_distribution<int> length(min_len, max_len);
  plan.window_length = length(rng);
  std::uniform_int_distribution<int> start(0, config.frames - plan.window_length);
  plan.window_start = start(rng);
  return plan;
}

SyntheticVideo render_video(const DatasetManifest& manifest,
                            const std::vector<std::vector<double>>& embeddings,
                            const VideoPlan& plan, std::string id, Split split,
                            std::uint64_t seed) {
  const auto& config = manifest.config;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto concept_of = [&](int cid) -> const Concept& {
    if (cid < 0 || cid >= static_cast<int>(config.concepts.size())) {
      throw ConfigError("plan references unknown concept " + std::to_string(cid));
    }
    return config.concepts[static_cast<std::size_t>(cid)];
  };
  const auto gain = [&](int cid) {
    for (const auto& [c, g] : plan.attenuation) {
      if (c == cid) return g;
    }
    return 1.0;
  };

  SyntheticVideo video;
  video.id = std::move(id);
  video.split = split;
  video.action_label = plan.action;
  video.active_concepts = plan.objects;
  video.active_concepts.push_back(plan.action);
  if (plan.scene) video.active_concepts.push_back(*plan.scene);
  std::sort(video.active_concepts.begin(), video.active_concepts.end());
  if (concept_of(plan.action).kind != ConceptKind::kAction) {
    throw ConfigError("plan action must be an action concept");
  }

  const std::size_t d = static_cast<std::size_t>(config.feature_dim);
  for (int t = 0; t < config.frames; ++t) {
    std::vector<int> present = plan.objects;
    if (plan.scene) present.push_back(*plan.scene);
    if (t >= plan.window_start && t < plan.window_start + plan.window_length) {
      present.push_back(plan.action);
    }
    std::sort(present.begin(), present.end());
    std::vector<double> frame(d, 0.0);
    for (int cid : present) {
      const double g = gain(cid);
      for (std::size_t i = 0; i < d; ++i) frame[i] += g * embeddings[static_cast<std::size_t>(cid)][i];
    }
    for (auto& x : frame) x += config.noise_sigma * noise(rng);
    video.frames.push_back(std::move(frame));
    video.frame_concepts.push_back(std::move(present));
  }

  static const std::vector<std::string> articles = {"a", "the"};
  static const std::vector<std::string> preps = {"in", "on", "at"};
  for (int k = 0; k < config.descriptions_per_video; ++k) {
    std::string s = choose(articles, rng) + " " + choose(concept_of(plan.objects[0]).words, rng) +
                    " is " + choose(concept_of(plan.action).words, rng);
    if (plan.objects.size() > 1) {
      s += " with " + choose(articles, rng) + " " + choose(concept_of(plan.objects[1]).words, rng);
    }
    if (plan.scene) {
      s += " " + choose(preps, rng) + " the " + choose(concept_of(*plan.scene).words, rng);
    }
    video.descriptions.push_back(std::move(s));
  }
  return video;
}

Dataset generate_dataset(const DatasetConfig& config, std::uint64_t seed) {
  validate(config);
  Dataset dataset;
  dataset.manifest.seed = seed;
  dataset.manifest.config = config;
  const auto embeddings = concept_embeddings(dataset.manifest);

  std::uint64_t index = 0;
  for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (int k = 0; k < dataset.manifest.count(split); ++k, ++index) {
      std::mt19937_64 rng(derive_seed(seed, 2 * index + 1));
      VideoPlan plan = sample_plan(config, rng);
      char id[16];
      std::snprintf(id, sizeof id, "v%04llu", static_cast<unsigned long long>(index));
      dataset.videos.push_back(
          render_video(dataset.manifest, embeddings, plan, id, split, derive_seed(seed, 2 * index + 2)));
    }
  }
  return dataset;
}

std::vector<std::string> tokenize(std::string_view sentence, bool append_eos) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (ch == '<' || ch == '>') {
      // keep special tokens such as <eos> intact
      current.push_back(ch);
    }
  }
  flush();
  if (append_eos && !out.empty()) out.emplace_back(kEosToken);
  return out;
}

// ---- JSON -----------------------------------------------------------------

nlohmann::json to_json(const DatasetConfig& c) {
  nlohmann::json concepts = nlohmann::json::array();
  for (const auto& k : c.concepts) {
    concepts.push_back({{"id", k.id}, {"kind", to_string(k.kind)}, {"name", k.name}, {"words", k.words}});
  }
  return {
      {"train_videos", c.train_videos},
      {"val_videos", c.val_videos},
      {"test_videos", c.test_videos},
      {"frames", c.frames},
      {"feature_dim", c.feature_dim},
      {"descriptions_per_video", c.descriptions_per_video},
      {"noise_sigma", c.noise_sigma},
      {"concept_scale", c.concept_scale},
      {"min_action_window", c.min_action_window},
      {"max_action_window", c.max_action_window},
      {"scene_probability", c.scene_probability},
      {"second_object_probability", c.second_object_probability},
      {"concepts", concepts},
  };
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j, DatasetConfig c) {
  const auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  set("train_videos", c.train_videos);
  set("val_videos", c.val_videos);
  set("test_videos", c.test_videos);
  set("frames", c.frames);
  set("feature_dim", c.feature_dim);
  set("descriptions_per_video", c.descriptions_per_video);
  set("noise_sigma", c.noise_sigma);
  set("concept_scale", c.concept_scale);
  set("min_action_window", c.min_action_window);
  set("max_action_window", c.max_action_window);
  set("scene_probability", c.scene_probability);
  set("second_object_probability", c.second_object_probability);
  if (j.contains("concepts")) {
    c.concepts.clear();
    for (const auto& k : j.at("concepts")) {
      c.concepts.push_back({k.at("id").get<int>(), concept_kind_from_string(k.at("kind")),
                            k.at("name").get<std::string>(), k.at("words").get<std::vector<std::string>>()});
    }
  }
  return c;
}

nlohmann::json to_json(const Dataset& dataset) {
  const auto& m = dataset.manifest;
  nlohmann::json videos = nlohmann::json::array();
  for (const auto& v : dataset.videos) {
    videos.push_back({
        {"id", v.id},
        {"split", to_string(v.split)},
        {"frames", v.frames},
        {"frame_concepts", v.frame_concepts},
        {"active_concepts", v.active_concepts},
        {"action_label", v.action_label},
        {"descriptions", v.descriptions},
    });
  }
  return {
      {"schema_version", 1},
      {"manifest",
       {{"seed", m.seed},
        {"counts", {{"train", m.config.train_videos}, {"val", m.config.val_videos}, {"test", m.config.test_videos}}},
        {"config", to_json(m.config)}}},
      {"videos", videos},
  };
}

Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset d;
  const auto& m = j.at("manifest");
  d.manifest.seed = m.at("seed").get<std::uint64_t>();
  d.manifest.config = dataset_config_from_json(m.at("config"));
  for (const auto& v : j.at("videos")) {
    SyntheticVideo video;
    video.id = v.at("id").get<std::string>();
    video.split = split_from_string(v.at("split"));
    v.at("frames").get_to(video.frames);
    v.at("frame_concepts").get_to(video.frame_concepts);
    v.at("active_concepts").get_to(video.active_concepts);
    video.action_label = v.at("action_label").get<int>();
    v.at("descriptions").get_to(video.descriptions);
    d.videos.push_back(std::move(video));
  }
  return d;
}

}  // namespace topicap
