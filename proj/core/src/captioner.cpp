#include "topicap/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "topicap/corpus.hpp"
#include "topicap/errors.hpp"

namespace topicap {

nlohmann::json to_json(const ModelConfig& c) {
  return {{"input_dim", c.input_dim},         {"encoder_hidden", c.encoder_hidden},
          {"decoder_hidden", c.decoder_hidden}, {"embedding_dim", c.embedding_dim},
          {"attention_dim", c.attention_dim},   {"head_hidden", c.head_hidden},
          {"num_topics", c.num_topics},         {"init_range", c.init_range},
          {"forget_bias", c.forget_bias}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  const auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  set("input_dim", c.input_dim);
  set("encoder_hidden", c.encoder_hidden);
  set("decoder_hidden", c.decoder_hidden);
  set("embedding_dim", c.embedding_dim);
  set("attention_dim", c.attention_dim);
  set("head_hidden", c.head_hidden);
  set("num_topics", c.num_topics);
  set("init_range", c.init_range);
  set("forget_bias", c.forget_bias);
  return c;
}

// ---- model ----------------------------------------------------------------

CaptionModel::CaptionModel(const ModelConfig& config, const std::vector<std::string>& words,
                           std::uint64_t seed)
    : config_(config) {
  if (config.input_dim < 1 || config.encoder_hidden < 1 || config.decoder_hidden < 1 ||
      config.embedding_dim < 1 || config.attention_dim < 1 || config.head_hidden < 1 ||
      config.num_topics < 1) {
    throw ConfigError("model dimensions must all be positive");
  }
  bos_ = vocabulary_.add(kBosToken);
  eos_ = vocabulary_.add(kEosToken);
  unk_ = vocabulary_.add(kUnkToken);
  for (const auto& w : words) vocabulary_.add(w);
  meta_.seed = seed;
  init_parameters(seed);
}

void CaptionModel::init_parameters(std::uint64_t seed) {
  const auto& c = config_;
  const std::size_t din = c.input_dim, he = c.encoder_hidden, dv = c.feature_dim(),
                    dh = c.decoder_hidden, de = c.embedding_dim, da = c.attention_dim,
                    df = c.head_hidden, nt = c.num_topics, nv = vocabulary_.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-c.init_range, c.init_range);
  const auto weights = [&](Shape shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = uniform(rng);
    return t;
  };
  const auto lstm_bias = [&](std::size_t hidden) {
    Tensor b({4 * hidden});
    for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = c.forget_bias;
    return b;
  };
  // Insertion order fixes the RNG stream; keep it stable.
  params_.add("enc.fwd.W", weights({4 * he, din + he}));
  params_.add("enc.fwd.b", lstm_bias(he));
  params_.add("enc.bwd.W", weights({4 * he, din + he}));
  params_.add("enc.bwd.b", lstm_bias(he));
  params_.add("dec.embed", weights({nv, de}));
  params_.add("dec.lstm.W", weights({4 * dh, de + dv + dh}));
  params_.add("dec.lstm.b", lstm_bias(dh));
  params_.add("att.w", weights({da}));
  params_.add("att.U", weights({da, dh}));
  params_.add("att.T", weights({da, dv}));
  params_.add("att.b", Tensor({da}));
  params_.add("out.W", weights({nv, dh + dv + de}));
  params_.add("out.b", Tensor({nv}));
  for (const char* prefix : {"init_c", "init_h"}) {
    const std::string p = prefix;
    params_.add(p + ".W1", weights({dh, dv}));
    params_.add(p + ".b1", Tensor({dh}));
    params_.add(p + ".W2", weights({dh, dh}));
    params_.add(p + ".b2", Tensor({dh}));
  }
  params_.add("head.W1", weights({df, dv}));
  params_.add("head.b1", Tensor({df}));
  params_.add("head.W2", weights({nt, df}));
  params_.add("head.b2", Tensor({nt}));
}

std::vector<int> CaptionModel::token_ids(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocabulary_.find(t).value_or(unk_));
  return out;
}

std::vector<std::string> CaptionModel::token_words(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocabulary_.word(id));
  return out;
}

void CaptionModel::zero_weights() {
  for (auto* p : params_.all()) p->value.fill(0.0);
}

bool operator==(const CaptionModel& a, const CaptionModel& b) {
  return a.config_ == b.config_ && a.vocabulary_ == b.vocabulary_ && a.meta_ == b.meta_ &&
         a.params_ == b.params_;
}

// ---- forward pieces -------------------------------------------------------

namespace {

struct LstmOut {
  Var c;
  Var h;
};

LstmOut lstm_step(Tape& tape, Var W, Var b, Var x, Var c_prev, Var h_prev, std::size_t hidden) {
  Var gates = add(matvec(W, concat({x, h_prev})), b);
  Var ifo = sigmoid(slice(gates, 0, 3 * hidden));
  Var g = tanh(slice(gates, 3 * hidden, hidden));
  Var i = slice(ifo, 0, hidden);
  Var f = slice(ifo, hidden, hidden);
  Var o = slice(ifo, 2 * hidden, hidden);
  Var c = add(mul(f, c_prev), mul(i, g));
  Var h = mul(o, tanh(c));
  (void)tape;
  return {c, h};
}

Var perceptron(Tape& tape, const CaptionModel& model, const std::string& prefix, Var x) {
  const auto& P = model.params();
  Var hidden = tanh(add(matvec(tape.param(P.get(prefix + ".W1")), x), tape.param(P.get(prefix + ".b1"))));
  return add(matvec(tape.param(P.get(prefix + ".W2")), hidden), tape.param(P.get(prefix + ".b2")));
}

void check_frames(const CaptionModel& model, const Frames& frames) {
  if (frames.empty()) throw ContractError("encode: video has no frames");
  for (const auto& f : frames) {
    if (static_cast<int>(f.size()) != model.config().input_dim) {
      throw DimensionError("encode: frame dimension " + std::to_string(f.size()) + " does not match input_dim " +
                           std::to_string(model.config().input_dim));
    }
  }
}

}  // namespace

EncodedVideo encode(Tape& tape, const CaptionModel& model, const Frames& frames) {
  check_frames(model, frames);
  const auto& P = model.params();
  const std::size_t he = model.config().encoder_hidden;
  const std::size_t n = frames.size();

  std::vector<Var> inputs;
  inputs.reserve(n);
  for (const auto& f : frames) inputs.push_back(tape.constant(Tensor::vector(f)));

  const auto run = [&](const char* dir, bool reverse) {
    Var W = tape.param(P.get(std::string("enc.") + dir + ".W"));
    Var b = tape.param(P.get(std::string("enc.") + dir + ".b"));
    Var c = tape.constant(Tensor({he}));
    Var h = tape.constant(Tensor({he}));
    std::vector<Var> hs(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t t = reverse ? n - 1 - k : k;
      auto out = lstm_step(tape, W, b, inputs[t], c, h, he);
      c = out.c;
      h = out.h;
      hs[t] = h;
    }
    return hs;
  };
  const auto fwd = run("fwd", false);
  const auto bwd = run("bwd", true);

  EncodedVideo out;
  out.features.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.features.push_back(concat({fwd[t], bwd[t]}));
  out.mean_pooled = mean(out.features);

  Var T = tape.param(P.get("att.T"));
  Var ba = tape.param(P.get("att.b"));
  out.projected.reserve(n);
  for (const auto& v : out.features) out.projected.push_back(add(matvec(T, v), ba));
  return out;
}

Attention attend(Tape& tape, const CaptionModel& model, Var h_prev, const EncodedVideo& video) {
  if (video.features.empty()) throw ContractError("attend: no frame features");
  if (static_cast<int>(h_prev.size()) != model.config().decoder_hidden) {
    throw DimensionError("attend: h_prev has length " + std::to_string(h_prev.size()) +
                         ", expected " + std::to_string(model.config().decoder_hidden));
  }
  const auto& P = model.params();
  Var w = tape.param(P.get("att.w"));
  Var uh = matvec(tape.param(P.get("att.U")), h_prev);
  std::vector<Var> scores;
  scores.reserve(video.projected.size());
  for (const auto& proj : video.projected) scores.push_back(dot(w, tanh(add(uh, proj))));
  Var alpha = softmax(stack(scores));
  return {alpha, weighted_sum(alpha, video.features)};
}

DecoderState init_state(Tape& tape, const CaptionModel& model, Var mean_pooled) {
  if (static_cast<int>(mean_pooled.size()) != model.config().feature_dim()) {
    throw DimensionError("init_state: mean-pooled feature length " + std::to_string(mean_pooled.size()) +
                         " does not match D_v " + std::to_string(model.config().feature_dim()));
  }
  return {perceptron(tape, model, "init_c", mean_pooled), perceptron(tape, model, "init_h", mean_pooled)};
}

DecodeStep decode_step(Tape& tape, const CaptionModel& model, const DecoderState& state, int y_prev,
                       const EncodedVideo& video) {
  if (y_prev < 0 || y_prev >= model.vocab_size()) {
    throw VocabularyError("decode_step: token " + std::to_string(y_prev) + " outside vocabulary of size " +
                          std::to_string(model.vocab_size()));
  }
  const auto& P = model.params();
  Var embed = row(tape.param(P.get("dec.embed")), static_cast<std::size_t>(y_prev));
  Attention att = attend(tape, model, state.h, video);
  auto out = lstm_step(tape, tape.param(P.get("dec.lstm.W")), tape.param(P.get("dec.lstm.b")),
                       concat({embed, att.context}), state.c, state.h,
                       static_cast<std::size_t>(model.config().decoder_hidden));
  Var logits = add(matvec(tape.param(P.get("out.W")), concat({out.h, att.context, embed})),
                   tape.param(P.get("out.b")));
  return {{out.c, out.h}, logits, att.weights};
}

Var sentence_nll(Tape& tape, const CaptionModel& model, const EncodedVideo& video,
                 const std::vector<int>& tokens) {
  if (tokens.empty()) throw ContractError("sentence_nll: empty token list");
  if (tokens.back() != model.eos()) throw ContractError("sentence_nll: tokens must end with <eos>");
  DecoderState state = init_state(tape, model, video.mean_pooled);
  std::vector<Var> terms;
  terms.reserve(tokens.size());
  int prev = model.bos();
  for (int y : tokens) {
    if (y < 0 || y >= model.vocab_size()) {
      throw VocabularyError("sentence_nll: token " + std::to_string(y) + " outside vocabulary");
    }
    auto step = decode_step(tape, model, state, prev, video);
    terms.push_back(cross_entropy(step.logits, static_cast<std::size_t>(y)));
    state = step.state;
    prev = y;
  }
  return add_n(terms);
}

Var head_forward(Tape& tape, const CaptionModel& model, Var mean_pooled) {
  if (static_cast<int>(mean_pooled.size()) != model.config().feature_dim()) {
    throw DimensionError("head: input length " + std::to_string(mean_pooled.size()) + " does not match D_v " +
                         std::to_string(model.config().feature_dim()));
  }
  return sigmoid(perceptron(tape, model, "head", mean_pooled));
}

Var interpretive_loss(Tape& tape, const CaptionModel& model, Var mean_pooled, const std::vector<int>& topics) {
  if (static_cast<int>(topics.size()) != model.config().num_topics) {
    throw DimensionError("interpretive_loss: topic vector length " + std::to_string(topics.size()) +
                         " does not match N_t " + std::to_string(model.config().num_topics));
  }
  std::vector<double> s(topics.begin(), topics.end());
  return squared_distance(head_forward(tape, model, mean_pooled), tape.constant(Tensor::vector(std::move(s))));
}

JointLoss joint_loss(Tape& tape, const CaptionModel& model, const Frames& frames, const std::vector<int>& tokens,
                     const std::vector<int>* topics, double lambda) {
  EncodedVideo video = encode(tape, model, frames);
  Var task = sentence_nll(tape, model, video, tokens);
  JointLoss out{task, task.value()[0], 0.0};
  if (topics) {
    Var interp = interpretive_loss(tape, model, video.mean_pooled, *topics);
    out.interpretive = interp.value()[0];
    if (lambda != 0.0) out.total = add(task, scale(interp, lambda));
  } else if (lambda != 0.0) {
    throw DataError("joint_loss: lambda > 0 requires a topic vector");
  }
  return out;
}

// ---- inference ------------------------------------------------------------

VideoFeatures video_features(const CaptionModel& model, const Frames& frames) {
  Tape tape(false);
  auto enc = encode(tape, model, frames);
  VideoFeatures out;
  for (const auto& v : enc.features) out.frames.push_back(v.value().data());
  out.mean_pooled = enc.mean_pooled.value().data();
  return out;
}

std::vector<double> predict_topics(const CaptionModel& model, const std::vector<double>& mean_pooled) {
  Tape tape(false);
  return head_forward(tape, model, tape.constant(Tensor::vector(mean_pooled))).value().data();
}

std::vector<std::string> Caption::words(const CaptionModel& model) const {
  std::vector<std::string> out;
  for (int t : tokens) {
    if (t == model.eos()) break;
    out.push_back(model.vocabulary().word(t));
  }
  return out;
}

std::string Caption::text(const CaptionModel& model) const {
  std::string s;
  for (const auto& w : words(model)) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

namespace {

std::vector<double> log_probs(const Tensor& logits) {
  const auto& x = logits.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

struct Hypothesis {
  std::vector<int> tokens;
  std::vector<std::vector<double>> attention;
  double logprob = 0.0;
  DecoderState state;
  bool finished = false;
};

}  // namespace

Caption generate(const CaptionModel& model, const Frames& frames, int max_len, int beam) {
  if (max_len < 1) throw ContractError("generate: max_len must be >= 1");
  if (beam < 1) throw ContractError("generate: beam must be >= 1");
  Tape tape(false);
  EncodedVideo video = encode(tape, model, frames);
  std::vector<Hypothesis> active{{{}, {}, 0.0, init_state(tape, model, video.mean_pooled), false}};
  std::vector<Hypothesis> finished;

  for (int step = 0; step < max_len && !active.empty(); ++step) {
    struct Candidate {
      double score;
      std::size_t parent;
      int token;
    };
    std::vector<Candidate> candidates;
    std::vector<DecodeStep> outputs;
    outputs.reserve(active.size());
    for (std::size_t b = 0; b < active.size(); ++b) {
      const auto& hyp = active[b];
      const int prev = hyp.tokens.empty() ? model.bos() : hyp.tokens.back();
      outputs.push_back(decode_step(tape, model, hyp.state, prev, video));
      const auto lp = log_probs(outputs.back().logits.value());
      for (std::size_t w = 0; w < lp.size(); ++w) {
        candidates.push_back({hyp.logprob + lp[w], b, static_cast<int>(w)});
      }
    }
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(beam), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& cand = candidates[k];
      Hypothesis h = active[cand.parent];
      h.tokens.push_back(cand.token);
      h.attention.push_back(outputs[cand.parent].attention.value().data());
      h.logprob = cand.score;
      h.state = outputs[cand.parent].state;
      if (cand.token == model.eos()) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    active = std::move(next);
  }

  const Hypothesis* best = nullptr;
  for (const auto* pool : {&finished, &active}) {
    for (const auto& h : *pool) {
      if (!best || h.logprob > best->logprob) best = &h;
    }
  }
  return {best->tokens, best->attention, best->logprob};
}

}  // namespace topicap
