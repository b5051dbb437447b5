#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/autodiff.hpp"
#include "topicap/vocabulary.hpp"

namespace topicap {

using Frames = std::vector<std::vector<double>>;

struct ModelConfig {
  int input_dim = 16;       // d_in
  int encoder_hidden = 16;  // d_enc per direction; D_v = 2 d_enc
  int decoder_hidden = 32;  // d_h
  int embedding_dim = 16;   // d_e
  int attention_dim = 16;   // d_a
  int head_hidden = 32;     // d_f
  int num_topics = 10;      // N_t
  double init_range = 0.08;
  double forget_bias = 1.0;

  int feature_dim() const { return 2 * encoder_hidden; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

// Provenance carried in checkpoints.
struct ModelMeta {
  std::string variant = "LSTM-I";
  double lambda = 0.1;
  std::uint64_t seed = 0;
  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

// Encoder, attentive decoder and interpretive head with their vocabulary.
//
// Parameter names:
//   enc.fwd.{W,b}, enc.bwd.{W,b}            bi-directional encoder LSTMs
//   dec.embed, dec.lstm.{W,b}               word embedding and decoder LSTM
//   att.{w,U,T,b}                           temporal attention
//   out.{W,b}                               word distribution
//   init_c.{W1,b1,W2,b2}, init_h.{...}      decoder state initialisers
//   head.{W1,b1,W2,b2}                      interpretive perceptron f
class CaptionModel {
 public:
  CaptionModel() = default;
  // `words` excludes the special tokens, which are prepended.
  CaptionModel(const ModelConfig& config, const std::vector<std::string>& words, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  ModelMeta& meta() { return meta_; }
  const ModelMeta& meta() const { return meta_; }

  int bos() const { return bos_; }
  int eos() const { return eos_; }
  int unk() const { return unk_; }
  int vocab_size() const { return static_cast<int>(vocabulary_.size()); }

  // Token strings to ids; words outside the vocabulary map to <unk>.
  std::vector<int> token_ids(const std::vector<std::string>& tokens) const;
  std::vector<std::string> token_words(const std::vector<int>& ids) const;

  void zero_weights();
  static bool is_encoder_parameter(const std::string& name) { return name.rfind("enc.", 0) == 0; }

  friend bool operator==(const CaptionModel& a, const CaptionModel& b);

 private:
  void init_parameters(std::uint64_t seed);
  friend CaptionModel model_from_json(const nlohmann::json& j);

  ModelConfig config_;
  Vocabulary vocabulary_;
  ParameterSet params_;
  ModelMeta meta_;
  int bos_ = 0, eos_ = 1, unk_ = 2;
};

// ---- differentiable pieces (record on the given tape) ---------------------

struct EncodedVideo {
  std::vector<Var> features;  // v_1..v_n, each D_v
  Var mean_pooled;            // (1/n) sum v_i
  // T_a v_i + b_a, shared by every decode step
  std::vector<Var> projected;
};

EncodedVideo encode(Tape& tape, const CaptionModel& model, const Frames& frames);

struct Attention {
  Var weights;  // alpha, length n
  Var context;  // phi(V), length D_v
};
Attention attend(Tape& tape, const CaptionModel& model, Var h_prev, const EncodedVideo& video);

struct DecoderState {
  Var c;
  Var h;
};
DecoderState init_state(Tape& tape, const CaptionModel& model, Var mean_pooled);

struct DecodeStep {
  DecoderState state;
  Var logits;
  Var attention;
};
DecodeStep decode_step(Tape& tape, const CaptionModel& model, const DecoderState& state, int y_prev,
                       const EncodedVideo& video);

// Teacher-forced -sum_t log p(y_t | y_<t, x); `tokens` must end with <eos>.
Var sentence_nll(Tape& tape, const CaptionModel& model, const EncodedVideo& video,
                 const std::vector<int>& tokens);

Var head_forward(Tape& tape, const CaptionModel& model, Var mean_pooled);  // f(v)
// ||f(v) - s||^2
Var interpretive_loss(Tape& tape, const CaptionModel& model, Var mean_pooled,
                      const std::vector<int>& topics);

// lambda * interpretive + nll. With lambda == 0 the interpretive term is left
// off the graph entirely.
struct JointLoss {
  Var total;
  double task = 0.0;
  double interpretive = 0.0;  // 0 when no topic vector is supplied
};
JointLoss joint_loss(Tape& tape, const CaptionModel& model, const Frames& frames,
                     const std::vector<int>& tokens, const std::vector<int>* topics, double lambda);

// ---- inference helpers ----------------------------------------------------

struct VideoFeatures {
  std::vector<std::vector<double>> frames;  // v_i
  std::vector<double> mean_pooled;
};
VideoFeatures video_features(const CaptionModel& model, const Frames& frames);

std::vector<double> predict_topics(const CaptionModel& model, const std::vector<double>& mean_pooled);

struct Caption {
  std::vector<int> tokens;                     // includes <eos> if emitted
  std::vector<std::vector<double>> attention;  // one row of n weights per step
  double logprob = 0.0;
  std::vector<std::string> words(const CaptionModel& model) const;  // without <eos>
  std::string text(const CaptionModel& model) const;
};

// beam == 1 is greedy decoding; ties resolve to the lowest token index.
Caption generate(const CaptionModel& model, const Frames& frames, int max_len = 20, int beam = 1);

// ---- checkpoints ----------------------------------------------------------

nlohmann::json to_json(const CaptionModel& model);
CaptionModel model_from_json(const nlohmann::json& j);

}  // namespace topicap
