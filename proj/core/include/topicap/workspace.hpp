#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "topicap/captioner.hpp"
#include "topicap/corpus.hpp"
#include "topicap/lda.hpp"
#include "topicap/trainer.hpp"

namespace topicap {

namespace fs = std::filesystem;

// Canonical text form of every JSON artifact (two-space indent, trailing newline).
std::string serialize(const nlohmann::json& j);

// Writes to a sibling temp file, flushes it to disk and renames it over `path`,
// so readers see either the old or the new content.
void write_file_atomic(const fs::path& path, const std::string& bytes);
void write_json_atomic(const fs::path& path, const nlohmann::json& j);
std::string read_file(const fs::path& path);
nlohmann::json read_json(const fs::path& path);

// Test hook: called after the first half of the bytes reached the temp file.
// Throwing from it aborts the write; the temp file is removed and the target
// is left untouched.
using WriteFaultHook = std::function<void(const fs::path& target)>;
void set_write_fault_hook(WriteFaultHook hook);

std::string sha256_hex(const std::string& bytes);

// Content address of a model: SHA-256 of its serialized checkpoint.
std::string snapshot_id(const CaptionModel& model);

// root/
//   dataset.json, lda.json, topic_vectors.json, failure_cases.json
//   checkpoints/ckpt_<variant>_s<seed>.json
//   maps/map_<variant>_s<seed>.json
//   reports/<name>.json
//   refinements/<snapshot>.json, refinements/history.json
class Workspace {
 public:
  explicit Workspace(fs::path root);

  const fs::path& root() const { return root_; }
  fs::path dataset() const { return root_ / "dataset.json"; }
  fs::path lda() const { return root_ / "lda.json"; }
  fs::path topic_vectors() const { return root_ / "topic_vectors.json"; }
  fs::path failure_cases() const { return root_ / "failure_cases.json"; }
  fs::path checkpoint(const std::string& variant, std::uint64_t seed) const;
  fs::path map(const std::string& variant, std::uint64_t seed) const;
  fs::path report(const std::string& name) const;
  fs::path refinement_snapshot(const std::string& snapshot) const;
  fs::path refinement_history() const { return root_ / "refinements" / "history.json"; }

  void create_layout() const;

 private:
  fs::path root_;
};

Dataset load_dataset(const fs::path& path);
TopicModel load_lda(const fs::path& path);
CaptionModel load_checkpoint(const fs::path& path);

// Topic-vector bits per video, inferred with the LDA model's own seed.
TopicVectorMap infer_topic_bits(const TopicModel& lda, const Dataset& dataset);
TopicVectorMap topic_bits(const std::vector<std::pair<std::string, TopicVector>>& vectors);

}  // namespace topicap
