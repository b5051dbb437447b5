#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/payloads.hpp"
#include "topicap/workspace.hpp"

namespace topicap {

struct ServiceConfig {
  fs::path workspace;
  fs::path checkpoint;  // defaults to checkpoints/ckpt_LSTM-I_s<seed>.json
  fs::path map;         // defaults to maps/map_LSTM-I_s<seed>.json
  std::uint64_t seed = 1;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<fs::path> ui_dir;  // defaults to <workspace>/ui when present
  int max_caption_length = 20;
};

struct Snapshot {
  std::string id;
  std::string parent;  // empty for the loaded checkpoint
  std::shared_ptr<const CaptionModel> model;
};

// Models, artifacts and refinement history behind the HTTP API. Snapshots are
// immutable; a refinement appends snapshot N+1. Refinements run one at a time
// in arrival order.
class ApiSession {
 public:
  explicit ApiSession(const ServiceConfig& config);

  const Inspection& inspection() const { return inspection_; }
  const ServiceConfig& config() const { return config_; }

  Snapshot head() const;
  Snapshot snapshot(const std::string& id) const;  // NotFoundError
  nlohmann::json snapshots_payload() const;
  nlohmann::json refinements_payload() const;

  nlohmann::json refine(const std::string& video, const std::vector<int>& topics, const RefinementOptions& options);

 private:
  void persist_history() const;

  ServiceConfig config_;
  Workspace workspace_;
  Inspection inspection_;
  mutable std::shared_mutex state_mutex_;
  std::vector<Snapshot> snapshots_;
  std::vector<nlohmann::json> history_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  unsigned long next_ticket_ = 0;
  unsigned long serving_ = 0;
};

class Service {
 public:
  explicit Service(const ServiceConfig& config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the socket; throws std::runtime_error when the port is taken.
  int bind();
  void listen();  // blocks until stop()
  void wait_until_ready() const;  // returns once listen() accepts connections
  void stop();
  ApiSession& session() { return *session_; }

 private:
  struct Impl;
  std::unique_ptr<ApiSession> session_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace topicap
