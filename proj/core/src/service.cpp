#include "topicap/service.hpp"

#include <httplib.h>

#include <algorithm>

#include "topicap/errors.hpp"

namespace topicap {

namespace {

fs::path or_default(const fs::path& given, const fs::path& fallback) { return given.empty() ? fallback : given; }

}  // namespace

ApiSession::ApiSession(const ServiceConfig& config) : config_(config), workspace_(config.workspace) {
  config_.checkpoint = or_default(config.checkpoint, workspace_.checkpoint("LSTM-I", config.seed));
  config_.map = or_default(config.map, workspace_.map("LSTM-I", config.seed));
  auto base = std::make_shared<const CaptionModel>(load_checkpoint(config_.checkpoint));
  inspection_ = load_inspection({workspace_.dataset(), workspace_.lda(), config_.map, workspace_.failure_cases()},
                                *base);
  snapshots_.push_back({snapshot_id(*base), "", base});

  // Resume an earlier session that started from the same checkpoint.
  if (fs::exists(workspace_.refinement_history())) {
    const auto recorded = read_json(workspace_.refinement_history());
    for (const auto& entry : recorded.at("refinements")) {
      history_.push_back(entry);
      const auto before = entry.at("snapshot_before").get<std::string>();
      const auto after = entry.at("snapshot_after").get<std::string>();
      if (before != snapshots_.back().id || after == before) continue;
      const auto path = workspace_.refinement_snapshot(after);
      if (!fs::exists(path)) continue;
      snapshots_.push_back({after, before, std::make_shared<const CaptionModel>(load_checkpoint(path))});
    }
  }
}

Snapshot ApiSession::head() const {
  std::shared_lock lock(state_mutex_);
  return snapshots_.back();
}

Snapshot ApiSession::snapshot(const std::string& id) const {
  std::shared_lock lock(state_mutex_);
  for (const auto& s : snapshots_) {
    if (s.id == id) return s;
  }
  throw NotFoundError("no snapshot '" + id + "'");
}

nlohmann::json ApiSession::snapshots_payload() const {
  std::shared_lock lock(state_mutex_);
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    list.push_back({{"index", i}, {"id", snapshots_[i].id}, {"parent", snapshots_[i].parent}});
  }
  return {{"head", snapshots_.back().id}, {"snapshots", list}};
}

nlohmann::json ApiSession::refinements_payload() const {
  std::shared_lock lock(state_mutex_);
  return {{"refinements", history_}};
}

void ApiSession::persist_history() const {
  write_json_atomic(workspace_.refinement_history(), {{"schema_version", kSchemaVersion}, {"refinements", history_}});
}

nlohmann::json ApiSession::refine(const std::string& video, const std::vector<int>& topics,
                                  const RefinementOptions& options) {
  // FIFO ticket lock: requests are served strictly in arrival order.
  std::unique_lock queue(queue_mutex_);
  const unsigned long ticket = next_ticket_++;
  queue_cv_.wait(queue, [&] { return serving_ == ticket; });
  queue.unlock();
  const auto release = [&] {
    {
      std::lock_guard lock(queue_mutex_);
      ++serving_;
    }
    queue_cv_.notify_all();
  };

  try {
    const Snapshot base = head();
    auto run = run_refinement(*base.model, inspection_, video, topics, options);
    if (!run.refinement.result.failed) {
      auto model = std::make_shared<const CaptionModel>(std::move(run.refinement.model));
      write_json_atomic(workspace_.refinement_snapshot(run.snapshot_after), to_json(*model));
      std::unique_lock lock(state_mutex_);
      snapshots_.push_back({run.snapshot_after, base.id, std::move(model)});
      history_.push_back(run.payload);
      persist_history();
    } else {
      std::unique_lock lock(state_mutex_);
      history_.push_back(run.payload);
      persist_history();
    }
    release();
    return run.payload;
  } catch (...) {
    release();
    throw;
  }
}

struct Service::Impl {
  httplib::Server server;
  int port = 0;
};

namespace {

void reply(httplib::Response& res, const nlohmann::json& data) {
  res.set_content(envelope(data).dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& type, const std::string& message,
                 std::optional<int> topic = std::nullopt) {
  auto body = error_envelope(type, message);
  if (topic) body["error"]["topic"] = *topic;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int int_param(const httplib::Request& req, const char* key, int fallback) {
  if (!req.has_param(key)) return fallback;
  const auto text = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string("query parameter '") + key + "' must be an integer");
  }
}

nlohmann::json body_json(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("request body is not valid JSON: ") + e.what());
  }
}

// Runs a handler and maps library errors onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const NotFoundError& e) {
      reply_error(res, 404, "not_found", e.what());
    } catch (const UnrefinableTopicError& e) {
      reply_error(res, 422, "unrefinable_topic", e.what(), e.topic());
    } catch (const IndexError& e) {
      reply_error(res, 400, "index", e.what());
    } catch (const ConfigError& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

Service::Service(const ServiceConfig& config)
    : session_(std::make_unique<ApiSession>(config)), impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  // httplib's default adds SO_REUSEPORT, which would let a second server share a busy port.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  ApiSession& api = *session_;
  const int max_len = config.max_caption_length;

  const auto snapshot_for = [&api](const std::string& id) { return id.empty() ? api.head() : api.snapshot(id); };

  s.Get("/videos", guarded([&api](const httplib::Request& req, httplib::Response& res) {
          const int offset = int_param(req, "offset", 0);
          const int limit = int_param(req, "limit", 50);
          if (offset < 0 || limit < 1) throw ConfigError("offset must be >= 0 and limit >= 1");
          reply(res, videos_page(api.inspection(), static_cast<std::size_t>(offset), static_cast<std::size_t>(limit)));
        }));
  s.Get(R"(/videos/([^/]+))", guarded([&api](const httplib::Request& req, httplib::Response& res) {
          const auto& in = api.inspection();
          reply(res, video_detail(in, in.video(req.matches[1])));
        }));
  s.Post(R"(/videos/([^/]+)/caption)",
         guarded([&api, snapshot_for, max_len](const httplib::Request& req, httplib::Response& res) {
           const auto body = body_json(req);
           const auto snap = snapshot_for(body.value("snapshot", std::string{}));
           reply(res, caption_payload(*snap.model, snap.id, api.inspection().video(req.matches[1]), max_len));
         }));
  s.Get(R"(/videos/([^/]+)/activations)",
        guarded([&api, snapshot_for](const httplib::Request& req, httplib::Response& res) {
          if (!req.has_param("neuron")) throw ConfigError("query parameter 'neuron' is required");
          const auto snap = snapshot_for(req.has_param("snapshot") ? req.get_param_value("snapshot") : "");
          reply(res, activations_payload(*snap.model, snap.id, api.inspection().video(req.matches[1]),
                                         int_param(req, "neuron", 0)));
        }));
  s.Get("/topics", guarded([&api](const httplib::Request& req, httplib::Response& res) {
          reply(res, topics_payload(api.inspection().lda, int_param(req, "k", 10)));
        }));
  s.Get("/map", guarded([&api](const httplib::Request&, httplib::Response& res) {
          reply(res, to_json(api.inspection().map));
        }));
  s.Get("/peakiness", guarded([&api, snapshot_for](const httplib::Request& req, httplib::Response& res) {
          if (!req.has_param("topic")) throw ConfigError("query parameter 'topic' is required");
          const auto snap = snapshot_for(req.has_param("snapshot") ? req.get_param_value("snapshot") : "");
          const Split split =
              req.has_param("split") ? split_from_string(req.get_param_value("split")) : Split::kTest;
          reply(res, peakiness_payload(*snap.model, snap.id, api.inspection(), int_param(req, "topic", 0), split));
        }));
  s.Post("/refinements", guarded([&api](const httplib::Request& req, httplib::Response& res) {
           const auto body = body_json(req);
           RefinementOptions options;
           options.mu = body.value("mu", options.mu);
           options.steps = body.value("steps", options.steps);
           const auto topics = body.at("topics").get<std::vector<int>>();
           if (topics.empty()) throw ConfigError("'topics' must name at least one topic");
           reply(res, api.refine(body.at("videoId").get<std::string>(), topics, options));
         }));
  s.Get("/refinements", guarded([&api](const httplib::Request&, httplib::Response& res) {
          reply(res, api.refinements_payload());
        }));
  s.Get("/snapshots", guarded([&api](const httplib::Request&, httplib::Response& res) {
          reply(res, api.snapshots_payload());
        }));

  const fs::path ui = config.ui_dir.value_or(config.workspace / "ui");
  if (fs::is_directory(ui)) s.set_mount_point("/ui", ui.string());
}

Service::~Service() { stop(); }

int Service::bind() {
  const auto& config = session_->config();
  auto& s = impl_->server;
  if (config.port == 0) {
    impl_->port = s.bind_to_any_port(config.host);
    if (impl_->port < 0) throw std::runtime_error("cannot bind to " + config.host);
  } else {
    if (!s.bind_to_port(config.host, config.port)) {
      throw std::runtime_error("port " + std::to_string(config.port) + " on " + config.host + " is busy");
    }
    impl_->port = config.port;
  }
  return impl_->port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace topicap
