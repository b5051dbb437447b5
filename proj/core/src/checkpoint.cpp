#include "topicap/captioner.hpp"
#include "topicap/corpus.hpp"
#include "topicap/errors.hpp"

namespace topicap {

nlohmann::json to_json(const CaptionModel& model) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [name, p] : model.params()) {
    params.push_back({{"name", name}, {"shape", p.value.shape()}, {"values", p.value.data()}});
  }
  return {
      {"schema_version", 1},
      {"config", to_json(model.config())},
      {"hyperparameters",
       {{"variant", model.meta().variant}, {"lambda", model.meta().lambda}, {"seed", model.meta().seed}}},
      {"vocabulary", model.vocabulary().words()},
      {"parameters", params},
  };
}

CaptionModel model_from_json(const nlohmann::json& j) {
  CaptionModel m;
  m.config_ = model_config_from_json(j.at("config"));
  const auto& h = j.at("hyperparameters");
  m.meta_.variant = h.at("variant").get<std::string>();
  m.meta_.lambda = h.at("lambda").get<double>();
  m.meta_.seed = h.at("seed").get<std::uint64_t>();
  m.vocabulary_ = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
  for (const char* special : {kBosToken, kEosToken, kUnkToken}) {
    if (!m.vocabulary_.contains(special)) {
      throw DataError(std::string("checkpoint vocabulary lacks ") + special);
    }
  }
  m.bos_ = m.vocabulary_.index(kBosToken);
  m.eos_ = m.vocabulary_.index(kEosToken);
  m.unk_ = m.vocabulary_.index(kUnkToken);
  for (const auto& p : j.at("parameters")) {
    m.params_.add(p.at("name").get<std::string>(),
                  Tensor(p.at("shape").get<Shape>(), p.at("values").get<std::vector<double>>()));
  }
  // Shapes must agree with a freshly built model of the same config.
  CaptionModel reference(m.config_, {}, 0);
  for (const auto& [name, p] : reference.params()) {
    if (!m.params_.contains(name)) throw DataError("checkpoint is missing parameter '" + name + "'");
    auto expected = p.value.shape();
    if (name == "dec.embed" || name == "out.W" || name == "out.b") expected[0] = m.vocabulary_.size();
    if (m.params_.get(name).value.shape() != expected) {
      throw DataError("checkpoint parameter '" + name + "' has shape " +
                      shape_string(m.params_.get(name).value.shape()) + ", expected " + shape_string(expected));
    }
  }
  if (m.params_.size() != reference.params().size()) throw DataError("checkpoint has unexpected parameters");
  return m;
}

}  // namespace topicap
