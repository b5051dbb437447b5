#include "topicap/payloads.hpp"

#include "topicap/errors.hpp"
#include "topicap/vocabulary.hpp"

namespace topicap {

nlohmann::json envelope(const nlohmann::json& data) { return {{"schema_version", kSchemaVersion}, {"data", data}}; }

nlohmann::json error_envelope(const std::string& type, const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"error", {{"type", type}, {"message", message}}}};
}

const SyntheticVideo& Inspection::video(const std::string& id) const {
  for (const auto& c : failure_cases) {
    if (c.video.id == id) return c.video;
  }
  return dataset.find(id);
}

bool Inspection::is_planted(const std::string& id) const {
  for (const auto& c : failure_cases) {
    if (c.video.id == id) return true;
  }
  return false;
}

std::vector<int> infer_topic_bits(const TopicModel& lda, const SyntheticVideo& video) {
  const auto doc = document_tokens(video, lda.vocabulary);
  return topic_vector(lda, doc, {}, derive_seed(lda.seed, fnv1a64(video.id))).bits;
}

Inspection load_inspection(const InspectionPaths& paths, const CaptionModel& model) {
  Inspection in;
  in.dataset = load_dataset(paths.dataset);
  in.lda = load_lda(paths.lda);
  in.topics = infer_topic_bits(in.lda, in.dataset);
  if (!paths.map.empty()) in.map = neuron_map_from_json(read_json(paths.map));
  if (paths.failure_cases && fs::exists(*paths.failure_cases)) {
    in.failure_cases = failure_cases_from_json(read_json(*paths.failure_cases));
    for (const auto& c : in.failure_cases) in.topics[c.video.id] = infer_topic_bits(in.lda, c.video);
  }
  in.profile = build_profile(model, in.dataset.split(Split::kTrain), in.topics, in.map);
  return in;
}

namespace {

nlohmann::json video_json(const SyntheticVideo& v) {
  return {{"id", v.id},
          {"split", to_string(v.split)},
          {"frames", v.frames},
          {"frame_concepts", v.frame_concepts},
          {"active_concepts", v.active_concepts},
          {"action_label", v.action_label},
          {"descriptions", v.descriptions}};
}

SyntheticVideo video_from_json(const nlohmann::json& j) {
  SyntheticVideo v;
  v.id = j.at("id").get<std::string>();
  v.split = split_from_string(j.at("split").get<std::string>());
  j.at("frames").get_to(v.frames);
  j.at("frame_concepts").get_to(v.frame_concepts);
  j.at("active_concepts").get_to(v.active_concepts);
  v.action_label = j.at("action_label").get<int>();
  j.at("descriptions").get_to(v.descriptions);
  return v;
}

std::vector<int> bits_or_empty(const Inspection& in, const std::string& id) {
  auto it = in.topics.find(id);
  return it == in.topics.end() ? std::vector<int>{} : it->second;
}

}  // namespace

nlohmann::json to_json(const FailureCase& c) {
  return {{"video", video_json(c.video)}, {"concept", c.concept_id}, {"topic", c.topic}};
}

FailureCase failure_case_from_json(const nlohmann::json& j) {
  return {video_from_json(j.at("video")), j.at("concept").get<int>(), j.at("topic").get<int>()};
}

nlohmann::json failure_cases_to_json(const std::vector<FailureCase>& cases) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cases) arr.push_back(to_json(c));
  return {{"schema_version", kSchemaVersion}, {"cases", arr}};
}

std::vector<FailureCase> failure_cases_from_json(const nlohmann::json& j) {
  std::vector<FailureCase> out;
  for (const auto& c : j.at("cases")) out.push_back(failure_case_from_json(c));
  return out;
}

nlohmann::json video_summary(const Inspection& in, const SyntheticVideo& video) {
  return {{"id", video.id},
          {"split", to_string(video.split)},
          {"planted", in.is_planted(video.id)},
          {"action_label", video.action_label},
          {"active_concepts", video.active_concepts},
          {"topics", bits_or_empty(in, video.id)}};
}

nlohmann::json video_detail(const Inspection& in, const SyntheticVideo& video) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& concepts : video.frame_concepts) {
    nlohmann::json names = nlohmann::json::array();
    for (int c : concepts) names.push_back(in.dataset.concept_by_id(c).name);
    frames.push_back({{"concepts", concepts}, {"names", names}});
  }
  auto out = video_summary(in, video);
  out["num_frames"] = video.frames.size();
  out["frames"] = frames;
  out["descriptions"] = video.descriptions;
  return out;
}

nlohmann::json videos_page(const Inspection& in, std::size_t offset, std::size_t limit) {
  std::vector<const SyntheticVideo*> all;
  for (const auto& v : in.dataset.videos) all.push_back(&v);
  for (const auto& c : in.failure_cases) all.push_back(&c.video);
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = offset; i < all.size() && i < offset + limit; ++i) items.push_back(video_summary(in, *all[i]));
  return {{"total", all.size()}, {"offset", offset}, {"limit", limit}, {"videos", items}};
}

nlohmann::json caption_payload(const CaptionModel& model, const std::string& snapshot, const SyntheticVideo& video,
                               int max_len, int beam) {
  const auto caption = generate(model, video.frames, max_len, beam);
  return {{"snapshot", snapshot},
          {"video", video.id},
          {"tokens", model.token_words(caption.tokens)},
          {"text", caption.text(model)},
          {"attention", caption.attention},
          {"logprob", caption.logprob}};
}

nlohmann::json topics_payload(const TopicModel& lda, int k) {
  nlohmann::json topics = nlohmann::json::array();
  for (int t = 0; t < lda.num_topics; ++t) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& w : top_words(lda, t, k)) words.push_back({{"word", w.word}, {"probability", w.probability}});
    topics.push_back({{"topic", t}, {"words", words}});
  }
  return {{"num_topics", lda.num_topics}, {"topics", topics}};
}

nlohmann::json activations_payload(const CaptionModel& model, const std::string& snapshot,
                                   const SyntheticVideo& video, int neuron) {
  auto out = to_json(activation_trace(model, video, neuron));
  out["snapshot"] = snapshot;
  return out;
}

nlohmann::json peakiness_payload(const CaptionModel& model, const std::string& snapshot, const Inspection& in,
                                 int topic, Split split) {
  if (topic < 0 || topic >= in.lda.num_topics) {
    throw IndexError("topic " + std::to_string(topic) + " outside [0, " + std::to_string(in.lda.num_topics) + ")");
  }
  std::vector<const SyntheticVideo*> subset;
  for (const auto* v : in.dataset.split(split)) {
    auto it = in.topics.find(v->id);
    if (it != in.topics.end() && it->second[static_cast<std::size_t>(topic)]) subset.push_back(v);
  }
  auto out = to_json(peakiness(model, subset));
  out["snapshot"] = snapshot;
  out["topic"] = topic;
  out["split"] = to_string(split);
  out["videos"] = subset.size();
  return out;
}

RefinementRun run_refinement(const CaptionModel& model, const Inspection& in, const std::string& video_id,
                             const std::vector<int>& topics, const RefinementOptions& options) {
  const auto& video = in.video(video_id);
  RefinementRun run{refine_video(model, video, topics, in.map, in.profile, options), snapshot_id(model), {}, {}};
  const auto test = in.dataset.split(Split::kTest);
  run.refinement.result.test_bleu_before = caption_bleu(model, test);
  run.refinement.result.test_bleu_after = caption_bleu(run.refinement.model, test);
  run.snapshot_after = snapshot_id(run.refinement.model);
  run.payload = {{"snapshot_before", run.snapshot_before},
                 {"snapshot_after", run.snapshot_after},
                 {"result", to_json(run.refinement.result)}};
  return run;
}

}  // namespace topicap
