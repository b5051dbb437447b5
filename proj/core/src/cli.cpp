#include "topicap/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

#include "topicap/errors.hpp"
#include "topicap/evaluation.hpp"
#include "topicap/hitl.hpp"
#include "topicap/interpretation.hpp"
#include "topicap/lda.hpp"
#include "topicap/payloads.hpp"
#include "topicap/service.hpp"
#include "topicap/trainer.hpp"
#include "topicap/workspace.hpp"

namespace topicap {

namespace {

// Missing path with no workspace to default from.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string workspace;
  std::uint64_t seed = 1;
  std::string config;

  std::optional<Workspace> ws() const {
    if (workspace.empty()) return std::nullopt;
    return Workspace(workspace);
  }

  // Section of the --config file, or an empty object.
  nlohmann::json section(const char* name) const {
    if (config.empty()) return nlohmann::json::object();
    const auto j = read_json(config);
    return j.contains(name) ? j.at(name) : nlohmann::json::object();
  }
};

fs::path resolve(const std::string& given, const Globals& g, fs::path (*fallback)(const Workspace&),
                 const char* flag) {
  if (!given.empty()) return given;
  if (auto ws = g.ws()) return fallback(*ws);
  throw UsageError(std::string(flag) + " is required (or pass --workspace)");
}

fs::path ws_dataset(const Workspace& w) { return w.dataset(); }
fs::path ws_lda(const Workspace& w) { return w.lda(); }

std::vector<int> parse_topics(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--topics expects comma-separated integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("--topics must name at least one topic");
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

// Dataset plus any planted failure cases, for lookups by video id.
Inspection videos_only(const std::string& dataset, const std::string& cases, const Globals& g) {
  Inspection in;
  in.dataset = load_dataset(resolve(dataset, g, ws_dataset, "--dataset"));
  fs::path path = cases;
  if (path.empty() && g.ws()) path = g.ws()->failure_cases();
  if (!path.empty() && fs::exists(path)) in.failure_cases = failure_cases_from_json(read_json(path));
  return in;
}

void emit(std::ostream& out, const nlohmann::json& j) { out << serialize(j); }

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topic-supervised interpretable video captioning"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--workspace", g.workspace, "Workspace directory (default location of every artifact)");
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--config", g.config, "JSON file with dataset/lda/train/transfer/refine sections")
      ->check(CLI::ExistingFile);

  std::function<void()> action;
  const auto on = [&action](CLI::App* cmd, std::function<void()> fn) {
    cmd->callback([&action, fn] { action = fn; });
  };

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "Generate the synthetic video dataset");
  std::string gen_out;
  generate_cmd->add_option("--out", gen_out, "Output directory (dataset.json is written inside)");
  on(generate_cmd, [&] {
    const fs::path dir = gen_out.empty() ? (g.workspace.empty() ? throw UsageError("--out is required (or pass --workspace)")
                                                                : fs::path(g.workspace))
                                         : fs::path(gen_out);
    const auto config = dataset_config_from_json(g.section("dataset"));
    const auto dataset = generate_dataset(config, g.seed);
    Workspace(dir).create_layout();
    write_json_atomic(Workspace(dir).dataset(), to_json(dataset));
    emit(out, {{"path", Workspace(dir).dataset().string()},
               {"seed", g.seed},
               {"counts", {{"train", config.train_videos}, {"val", config.val_videos}, {"test", config.test_videos}}}});
  });

  // lda
  auto* lda_cmd = app.add_subcommand("lda", "Topic model over the training descriptions");
  lda_cmd->require_subcommand(1);
  std::string lda_dataset, lda_model_path, lda_out, lda_vectors_out;
  int lda_topics = -1, lda_sweeps = -1, lda_k = 10;
  auto* lda_fit = lda_cmd->add_subcommand("fit", "Fit LDA by collapsed Gibbs sampling");
  lda_fit->add_option("--dataset", lda_dataset, "dataset.json");
  lda_fit->add_option("--topics", lda_topics, "Number of topics");
  lda_fit->add_option("--sweeps", lda_sweeps, "Gibbs sweeps");
  lda_fit->add_option("--out", lda_out, "Output model (default <workspace>/lda.json)");
  lda_fit->add_option("--vectors-out", lda_vectors_out, "Also write topic vectors here");
  on(lda_fit, [&] {
    const auto dataset = load_dataset(resolve(lda_dataset, g, ws_dataset, "--dataset"));
    const auto section = g.section("lda");
    LdaConfig config;
    config.num_topics = section.value("num_topics", config.num_topics);
    config.alpha = section.value("alpha", config.alpha);
    config.beta = section.value("beta", config.beta);
    config.sweeps = section.value("sweeps", config.sweeps);
    if (lda_topics > 0) config.num_topics = lda_topics;
    if (lda_sweeps >= 0) config.sweeps = lda_sweeps;
    config.seed = g.seed;
    const auto model = fit(build_corpus(dataset, Split::kTrain), config);
    const fs::path path = resolve(lda_out, g, ws_lda, "--out");
    write_json_atomic(path, to_json(model));
    fs::path vectors_path = lda_vectors_out;
    if (vectors_path.empty() && g.ws()) vectors_path = g.ws()->topic_vectors();
    if (!vectors_path.empty()) {
      write_json_atomic(vectors_path, topic_vectors_to_json(topic_vectors(model, dataset, {}, model.seed)));
    }
    auto summary = topics_payload(model, 5);
    summary["path"] = path.string();
    emit(out, summary);
  });
  auto* lda_topics_cmd = lda_cmd->add_subcommand("topics", "Top words per topic");
  lda_topics_cmd->add_option("--lda-model", lda_model_path, "lda.json");
  lda_topics_cmd->add_option("-k,--top", lda_k, "Words per topic")->capture_default_str();
  on(lda_topics_cmd, [&] { emit(out, topics_payload(load_lda(resolve(lda_model_path, g, ws_lda, "--lda-model")), lda_k)); });
  auto* lda_vectors = lda_cmd->add_subcommand("vectors", "Binary topic vector of every video");
  lda_vectors->add_option("--dataset", lda_dataset, "dataset.json");
  lda_vectors->add_option("--lda-model", lda_model_path, "lda.json");
  lda_vectors->add_option("--out", lda_out, "Write the vectors here as well");
  on(lda_vectors, [&] {
    const auto model = load_lda(resolve(lda_model_path, g, ws_lda, "--lda-model"));
    const auto dataset = load_dataset(resolve(lda_dataset, g, ws_dataset, "--dataset"));
    const auto j = topic_vectors_to_json(topic_vectors(model, dataset, {}, model.seed));
    if (!lda_out.empty()) write_json_atomic(lda_out, j);
    emit(out, j);
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a captioning model (LSTM-B or LSTM-I)");
  std::string train_dataset, train_lda, train_out, train_report, train_variant = "LSTM-I", train_candidates;
  std::optional<double> train_lambda;
  std::optional<int> train_epochs;
  train_cmd->add_option("--dataset", train_dataset, "dataset.json");
  train_cmd->add_option("--lda-model", train_lda, "lda.json (topic vectors are inferred from it)");
  train_cmd->add_option("--variant", train_variant, "LSTM-B or LSTM-I")->capture_default_str();
  train_cmd->add_option("--lambda", train_lambda, "Interpretive loss weight");
  train_cmd->add_option("--epochs", train_epochs, "Training epochs");
  train_cmd->add_option("--lambda-candidates", train_candidates,
                        "Comma-separated lambdas; picks the best on validation BLEU-4 first");
  train_cmd->add_option("--out", train_out, "Checkpoint path (default <workspace>/checkpoints/...)");
  train_cmd->add_option("--report", train_report, "Training report path (default <workspace>/reports/...)");
  on(train_cmd, [&] {
    if (train_dataset.empty()) throw UsageError("--dataset is required");
    const auto dataset = load_dataset(train_dataset);
    TrainConfig config = train_config_from_json(g.section("train"));
    config.variant = variant_from_string(train_variant);
    if (train_lambda) config.lambda = *train_lambda;
    if (train_epochs) config.epochs = *train_epochs;
    config.seed = g.seed;
    std::optional<TopicVectorMap> topics;
    if (!train_lda.empty() || g.ws()) topics = infer_topic_bits(load_lda(resolve(train_lda, g, ws_lda, "--lda-model")), dataset);
    if (!topics && config.variant != Variant::kBaseline) throw UsageError("--lda-model is required for LSTM-I");

    nlohmann::json selection;
    if (!train_candidates.empty()) {
      if (!topics) throw UsageError("--lambda-candidates needs --lda-model");
      const auto picked = select_lambda(dataset, *topics, parse_doubles(train_candidates), config);
      selection = {{"best_lambda", picked.best_lambda}, {"scores", nlohmann::json::array()}};
      for (const auto& [lambda, score] : picked.scores) selection["scores"].push_back({{"lambda", lambda}, {"val_bleu", score}});
      config.lambda = picked.best_lambda;
      config.variant = picked.best_lambda == 0.0 ? Variant::kBaseline : Variant::kInterpretive;
    }
    auto result = train(dataset, topics ? &*topics : nullptr, config, [&](const EpochStats& e) {
      err << "epoch " << e.epoch << "/" << config.epochs << " task/word " << e.task_loss_per_word << " interpretive "
          << e.interpretive_loss;
      if (e.val_bleu) err << " val BLEU-4 " << *e.val_bleu;
      err << "\n";
    });
    result.model.meta().seed = config.seed;
    const auto variant = to_string(config.variant);
    fs::path ckpt = train_out;
    if (ckpt.empty()) {
      if (!g.ws()) throw UsageError("--out is required (or pass --workspace)");
      ckpt = g.ws()->checkpoint(variant, config.seed);
    }
    write_json_atomic(ckpt, to_json(result.model));
    result.report.checkpoint_path = ckpt.string();
    auto report = to_json(result.report);
    if (!selection.is_null()) report["lambda_selection"] = selection;
    fs::path report_path = train_report;
    if (report_path.empty() && g.ws()) report_path = g.ws()->report("train_" + variant + "_s" + std::to_string(config.seed));
    if (!report_path.empty()) write_json_atomic(report_path, report);
    emit(out, report);
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluation");
  eval_cmd->require_subcommand(1);
  std::string ev_ckpt, ev_dataset, ev_lda, ev_split = "test", ev_variant = "LSTM-I", ev_video, ev_cases;
  int ev_beam = 1, ev_epochs = -1;
  auto* eval_bleu = eval_cmd->add_subcommand("bleu", "Corpus BLEU-4 of generated captions");
  eval_bleu->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  eval_bleu->add_option("--dataset", ev_dataset, "dataset.json");
  eval_bleu->add_option("--split", ev_split, "train, val or test")->capture_default_str();
  eval_bleu->add_option("--beam", ev_beam, "Beam width")->capture_default_str();
  on(eval_bleu, [&] {
    const auto model = load_checkpoint(ev_ckpt);
    const auto dataset = load_dataset(resolve(ev_dataset, g, ws_dataset, "--dataset"));
    const auto videos = dataset.split(split_from_string(ev_split));
    auto report = to_json(caption_bleu_report(model, videos, 20, ev_beam));
    report["split"] = ev_split;
    report["videos"] = videos.size();
    emit(out, report);
  });
  auto* eval_transfer = eval_cmd->add_subcommand("transfer", "Action recognition on encoder features");
  eval_transfer->add_option("--variant", ev_variant, "LSTM-B, LSTM-I or LSTM-R")->capture_default_str();
  eval_transfer->add_option("--ckpt", ev_ckpt, "Captioning checkpoint (LSTM-B / LSTM-I)");
  eval_transfer->add_option("--dataset", ev_dataset, "dataset.json");
  eval_transfer->add_option("--epochs", ev_epochs, "Classifier epochs");
  on(eval_transfer, [&] {
    const auto dataset = load_dataset(resolve(ev_dataset, g, ws_dataset, "--dataset"));
    TransferConfig config;
    config.variant = variant_from_string(ev_variant);
    config.seed = g.seed;
    const auto section = g.section("transfer");
    config.epochs = section.value("epochs", config.epochs);
    config.hidden = section.value("hidden", config.hidden);
    if (ev_epochs >= 0) config.epochs = ev_epochs;
    std::optional<CaptionModel> model;
    if (config.variant != Variant::kRandom) {
      fs::path ckpt = ev_ckpt;
      if (ckpt.empty() && g.ws()) ckpt = g.ws()->checkpoint(to_string(config.variant), g.seed);
      if (ckpt.empty() || !fs::exists(ckpt)) {
        throw ConfigError("transfer with " + to_string(config.variant) + " needs a captioning checkpoint" +
                          (ckpt.empty() ? std::string{} : " ('" + ckpt.string() + "' does not exist)"));
      }
      model = load_checkpoint(ckpt);
    }
    emit(out, to_json(transfer_train_eval(dataset, model ? &*model : nullptr, config)));
  });
  auto* eval_caption = eval_cmd->add_subcommand("caption", "Caption one video");
  eval_caption->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  eval_caption->add_option("--dataset", ev_dataset, "dataset.json");
  eval_caption->add_option("--video", ev_video, "Video id")->required();
  eval_caption->add_option("--failure-cases", ev_cases, "failure_cases.json with extra videos");
  eval_caption->add_option("--beam", ev_beam, "Beam width")->capture_default_str();
  on(eval_caption, [&] {
    const auto model = load_checkpoint(ev_ckpt);
    const auto in = videos_only(ev_dataset, ev_cases, g);
    emit(out, caption_payload(model, snapshot_id(model), in.video(ev_video), 20, ev_beam));
  });
  auto* eval_topics = eval_cmd->add_subcommand("topics", "Precision/recall/F1 of the interpretive head");
  eval_topics->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  eval_topics->add_option("--dataset", ev_dataset, "dataset.json");
  eval_topics->add_option("--lda-model", ev_lda, "lda.json");
  eval_topics->add_option("--split", ev_split, "train, val or test")->capture_default_str();
  on(eval_topics, [&] {
    const auto model = load_checkpoint(ev_ckpt);
    const auto dataset = load_dataset(resolve(ev_dataset, g, ws_dataset, "--dataset"));
    const auto topics = infer_topic_bits(load_lda(resolve(ev_lda, g, ws_lda, "--lda-model")), dataset);
    auto report = to_json(topic_f1(model, dataset.split(split_from_string(ev_split)), topics));
    report["split"] = ev_split;
    emit(out, report);
  });

  // interpret
  auto* interpret_cmd = app.add_subcommand("interpret", "Neuron-level interpretation");
  interpret_cmd->require_subcommand(1);
  std::string in_ckpt, in_dataset, in_lda, in_out, in_video, in_split = "test";
  int in_topic = 0, in_neuron = 0;
  auto* interpret_pdm = interpret_cmd->add_subcommand("pdm", "Build the neuron-topic map over the train split");
  interpret_pdm->add_option("--ckpt", in_ckpt, "Checkpoint")->required();
  interpret_pdm->add_option("--dataset", in_dataset, "dataset.json");
  interpret_pdm->add_option("--lda-model", in_lda, "lda.json");
  interpret_pdm->add_option("--out", in_out, "Output map (default <workspace>/maps/...)");
  on(interpret_pdm, [&] {
    const auto model = load_checkpoint(in_ckpt);
    const auto dataset = load_dataset(resolve(in_dataset, g, ws_dataset, "--dataset"));
    const auto topics = infer_topic_bits(load_lda(resolve(in_lda, g, ws_lda, "--lda-model")), dataset);
    const auto map = to_json(build_map(model, dataset.split(Split::kTrain), topics));
    fs::path path = in_out;
    if (path.empty() && g.ws()) path = g.ws()->map(model.meta().variant, model.meta().seed);
    if (!path.empty()) write_json_atomic(path, map);
    emit(out, map);
  });
  auto* interpret_peak = interpret_cmd->add_subcommand("peakiness", "Mean activation profile of one topic's videos");
  interpret_peak->add_option("--ckpt", in_ckpt, "Checkpoint")->required();
  interpret_peak->add_option("--dataset", in_dataset, "dataset.json");
  interpret_peak->add_option("--lda-model", in_lda, "lda.json");
  interpret_peak->add_option("--topic", in_topic, "Topic id")->required();
  interpret_peak->add_option("--split", in_split, "train, val or test")->capture_default_str();
  on(interpret_peak, [&] {
    const auto model = load_checkpoint(in_ckpt);
    Inspection in;
    in.dataset = load_dataset(resolve(in_dataset, g, ws_dataset, "--dataset"));
    in.lda = load_lda(resolve(in_lda, g, ws_lda, "--lda-model"));
    in.topics = infer_topic_bits(in.lda, in.dataset);
    emit(out, peakiness_payload(model, snapshot_id(model), in, in_topic, split_from_string(in_split)));
  });
  auto* interpret_trace = interpret_cmd->add_subcommand("trace", "Per-frame activation of one neuron");
  interpret_trace->add_option("--ckpt", in_ckpt, "Checkpoint")->required();
  interpret_trace->add_option("--dataset", in_dataset, "dataset.json");
  interpret_trace->add_option("--failure-cases", in_out, "failure_cases.json with extra videos");
  interpret_trace->add_option("--video", in_video, "Video id")->required();
  interpret_trace->add_option("--neuron", in_neuron, "Neuron index")->required();
  on(interpret_trace, [&] {
    const auto model = load_checkpoint(in_ckpt);
    const auto in = videos_only(in_dataset, in_out, g);
    emit(out, activations_payload(model, snapshot_id(model), in.video(in_video), in_neuron));
  });

  // hitl
  auto* hitl_cmd = app.add_subcommand("hitl", "Human-in-the-loop refinement");
  hitl_cmd->require_subcommand(1);
  std::string h_ckpt, h_map, h_dataset, h_lda, h_video, h_topics, h_out, h_cases;
  RefinementOptions h_options;
  FailureCaseOptions h_plant;
  auto* hitl_refine = hitl_cmd->add_subcommand("refine", "Refine the encoder for missing topics of one video");
  hitl_refine->add_option("--ckpt", h_ckpt, "Checkpoint")->required();
  hitl_refine->add_option("--map", h_map, "Neuron-topic map")->required();
  hitl_refine->add_option("--dataset", h_dataset, "dataset.json");
  hitl_refine->add_option("--lda-model", h_lda, "lda.json");
  hitl_refine->add_option("--failure-cases", h_cases, "failure_cases.json with extra videos");
  hitl_refine->add_option("--video", h_video, "Video id")->required();
  hitl_refine->add_option("--topics", h_topics, "Missing topics, e.g. 3,7")->required();
  hitl_refine->add_option("--mu", h_options.mu, "Drift penalty weight")->capture_default_str();
  hitl_refine->add_option("--steps", h_options.steps, "Optimizer steps")->capture_default_str();
  hitl_refine->add_option("--out", h_out, "Refined checkpoint")->required();
  on(hitl_refine, [&] {
    const auto model = load_checkpoint(h_ckpt);
    fs::path cases = h_cases;
    if (cases.empty() && g.ws()) cases = g.ws()->failure_cases();
    const auto in = load_inspection({resolve(h_dataset, g, ws_dataset, "--dataset"),
                                     resolve(h_lda, g, ws_lda, "--lda-model"), h_map,
                                     cases.empty() ? std::nullopt : std::optional<fs::path>(cases)},
                                    model);
    auto run = run_refinement(model, in, h_video, parse_topics(h_topics), h_options);
    write_json_atomic(h_out, to_json(run.refinement.model));
    emit(out, run.payload);
  });
  auto* hitl_plant = hitl_cmd->add_subcommand("plant", "Render videos whose object the model misses");
  hitl_plant->add_option("--ckpt", h_ckpt, "Checkpoint")->required();
  hitl_plant->add_option("--map", h_map, "Neuron-topic map")->required();
  hitl_plant->add_option("--dataset", h_dataset, "dataset.json");
  hitl_plant->add_option("--lda-model", h_lda, "lda.json");
  hitl_plant->add_option("--count", h_plant.count, "Number of cases")->capture_default_str();
  hitl_plant->add_option("--attenuation", h_plant.attenuation, "Gain on the object's embedding")
      ->capture_default_str();
  hitl_plant->add_option("--out", h_out, "Output (default <workspace>/failure_cases.json)");
  on(hitl_plant, [&] {
    const auto model = load_checkpoint(h_ckpt);
    const auto dataset = load_dataset(resolve(h_dataset, g, ws_dataset, "--dataset"));
    const auto lda = load_lda(resolve(h_lda, g, ws_lda, "--lda-model"));
    const auto map = neuron_map_from_json(read_json(h_map));
    h_plant.seed = g.seed;
    const auto cases = plant_failure_cases(dataset, model, lda, map, h_plant);
    fs::path path = h_out;
    if (path.empty()) {
      if (!g.ws()) throw UsageError("--out is required (or pass --workspace)");
      path = g.ws()->failure_cases();
    }
    write_json_atomic(path, failure_cases_to_json(cases));
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : cases) list.push_back({{"video", c.video.id}, {"concept", c.concept_id}, {"topic", c.topic}});
    emit(out, {{"path", path.string()}, {"cases", list}});
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for inspection and refinement");
  ServiceConfig serve_config;
  std::string serve_ckpt, serve_map, serve_ui;
  serve_cmd->add_option("--host", serve_config.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve_config.port, "Port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--ckpt", serve_ckpt, "Checkpoint (default <workspace>/checkpoints/ckpt_LSTM-I_s<seed>.json)");
  serve_cmd->add_option("--map", serve_map, "Map (default <workspace>/maps/map_LSTM-I_s<seed>.json)");
  serve_cmd->add_option("--ui", serve_ui, "Static UI bundle served under /ui");
  on(serve_cmd, [&] {
    if (g.workspace.empty()) throw UsageError("--workspace is required");
    serve_config.workspace = g.workspace;
    serve_config.seed = g.seed;
    serve_config.checkpoint = serve_ckpt;
    serve_config.map = serve_map;
    if (!serve_ui.empty()) serve_config.ui_dir = fs::path(serve_ui);
    Service service(serve_config);
    const int port = service.bind();
    err << "listening on http://" << serve_config.host << ":" << port << "\n";
    service.listen();
  });

  std::vector<const char*> argv;
  argv.push_back("topicap");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace topicap
