#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/captioner.hpp"
#include "topicap/corpus.hpp"
#include "topicap/hitl.hpp"
#include "topicap/interpretation.hpp"
#include "topicap/lda.hpp"
#include "topicap/trainer.hpp"
#include "topicap/workspace.hpp"

// JSON payloads shared by the CLI and the HTTP service. The service wraps each
// one in an envelope; the CLI prints it as is.
namespace topicap {

inline constexpr int kSchemaVersion = 1;

nlohmann::json envelope(const nlohmann::json& data);
nlohmann::json error_envelope(const std::string& type, const std::string& message);

// Everything the inspection payloads read besides the model itself.
struct Inspection {
  Dataset dataset;
  TopicModel lda;
  TopicVectorMap topics;  // dataset videos and planted failure cases
  NeuronTopicMap map;
  EnhancementProfile profile;
  std::vector<FailureCase> failure_cases;

  const SyntheticVideo& video(const std::string& id) const;  // NotFoundError
  bool is_planted(const std::string& id) const;
};

struct InspectionPaths {
  fs::path dataset;
  fs::path lda;
  fs::path map;  // empty: no map, no enhancement profile
  std::optional<fs::path> failure_cases;
};

// Loads the artifacts and derives topic vectors and the enhancement profile
// (from `model` over the train split).
Inspection load_inspection(const InspectionPaths& paths, const CaptionModel& model);

std::vector<int> infer_topic_bits(const TopicModel& lda, const SyntheticVideo& video);

nlohmann::json to_json(const FailureCase& c);
FailureCase failure_case_from_json(const nlohmann::json& j);
nlohmann::json failure_cases_to_json(const std::vector<FailureCase>& cases);
std::vector<FailureCase> failure_cases_from_json(const nlohmann::json& j);

nlohmann::json video_summary(const Inspection& in, const SyntheticVideo& video);
nlohmann::json video_detail(const Inspection& in, const SyntheticVideo& video);
nlohmann::json videos_page(const Inspection& in, std::size_t offset, std::size_t limit);

nlohmann::json caption_payload(const CaptionModel& model, const std::string& snapshot, const SyntheticVideo& video,
                               int max_len = 20, int beam = 1);
nlohmann::json topics_payload(const TopicModel& lda, int k = 10);
nlohmann::json activations_payload(const CaptionModel& model, const std::string& snapshot,
                                   const SyntheticVideo& video, int neuron);
// Peakiness over the videos of `split` whose topic vector has `topic` set.
nlohmann::json peakiness_payload(const CaptionModel& model, const std::string& snapshot, const Inspection& in,
                                 int topic, Split split = Split::kTest);

struct RefinementRun {
  Refinement refinement;
  std::string snapshot_before;
  std::string snapshot_after;
  nlohmann::json payload;
};

// Refines `model` on one video and records the test-split BLEU before and after.
RefinementRun run_refinement(const CaptionModel& model, const Inspection& in, const std::string& video_id,
                             const std::vector<int>& topics, const RefinementOptions& options);

}  // namespace topicap
