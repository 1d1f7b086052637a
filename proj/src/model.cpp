#include "wsbert/model.hpp"

#include "wsbert/checkpoint_io.hpp"
#include "wsbert/error.hpp"

namespace wsbert {

void ModelConfig::Validate() const {
  if (num_labels != 2 && num_labels != 3) {
    throw Error(ErrorCode::kConfigInvalid, "num_labels must be 2 or 3");
  }
  if (pair_encoder_id.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "pair_encoder_id is required");
  }
  if (variant == Variant::kSingle && knowledge_encoder_id) {
    throw Error(ErrorCode::kConfigInvalid,
                "the single variant takes no knowledge encoder");
  }
  if (variant == Variant::kDual &&
      (!knowledge_encoder_id || knowledge_encoder_id->empty())) {
    throw Error(ErrorCode::kConfigInvalid,
                "the dual variant needs a knowledge encoder");
  }
  if (variant == Variant::kSingle && wiki_finetune_top_layers) {
    throw Error(ErrorCode::kConfigInvalid,
                "wiki_finetune_top_layers applies to the dual variant only");
  }
  if (head_dropout < 0.0 || head_dropout >= 1.0) {
    throw Error(ErrorCode::kConfigInvalid, "head_dropout must lie in [0, 1)");
  }
}

nlohmann::json ModelConfig::ToJson() const {
  nlohmann::json j;
  j["variant"] = VariantName(variant);
  j["pair_encoder_id"] = pair_encoder_id;
  j["knowledge_encoder_id"] = knowledge_encoder_id
                                  ? nlohmann::json(*knowledge_encoder_id)
                                  : nlohmann::json(nullptr);
  j["num_labels"] = num_labels;
  j["wiki_finetune_top_layers"] =
      wiki_finetune_top_layers ? nlohmann::json(*wiki_finetune_top_layers)
                               : nlohmann::json("all");
  j["head_dropout"] = head_dropout;
  return j;
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.variant = ParseVariant(j.at("variant").get<std::string>());
  c.pair_encoder_id = j.at("pair_encoder_id").get<std::string>();
  if (j.contains("knowledge_encoder_id") && !j["knowledge_encoder_id"].is_null()) {
    c.knowledge_encoder_id = j["knowledge_encoder_id"].get<std::string>();
  }
  c.num_labels = j.value("num_labels", 3);
  if (j.contains("wiki_finetune_top_layers")) {
    const auto& top = j["wiki_finetune_top_layers"];
    if (top.is_number_integer()) {
      if (top.get<long long>() < 0) {
        throw Error(ErrorCode::kInvalidLayerCount, "negative layer count");
      }
      c.wiki_finetune_top_layers = top.get<std::size_t>();
    } else if (!(top.is_null() || (top.is_string() && top == "all"))) {
      throw Error(ErrorCode::kConfigInvalid,
                  "wiki_finetune_top_layers must be a count or \"all\"");
    }
  }
  c.head_dropout = j.value("head_dropout", 0.1);
  return c;
}

StanceModel::StanceModel(ModelConfig config, TransformerEncoder pair_encoder,
                         std::optional<TransformerEncoder> knowledge_encoder,
                         std::uint64_t seed)
    : config_(std::move(config)),
      pair_encoder_(std::move(pair_encoder)),
      knowledge_encoder_(std::move(knowledge_encoder)),
      rng_(seed) {
  config_.Validate();
  if ((config_.variant == Variant::kDual) != knowledge_encoder_.has_value()) {
    throw Error(ErrorCode::kConfigInvalid,
                "encoder count does not match the model variant");
  }
  head_ = Linear("head", static_cast<Eigen::Index>(head_input_width()),
                 config_.num_labels);
  head_.Init(0.02, rng_);
  if (config_.variant == Variant::kDual) {
    FreezeKnowledgeEncoder(config_.wiki_finetune_top_layers);
  }
}

std::size_t StanceModel::head_input_width() const {
  std::size_t width = pair_encoder_.hidden();
  if (knowledge_encoder_) width += knowledge_encoder_->hidden();
  return width;
}

EncoderLimits StanceModel::limits() const {
  EncoderLimits limits;
  limits.pair_max_positions = pair_encoder_.config().max_positions;
  limits.knowledge_max_positions =
      knowledge_encoder_ ? knowledge_encoder_->config().max_positions
                         : pair_encoder_.config().max_positions;
  return limits;
}

void StanceModel::CheckBatch(std::span<const EncodedInput> batch) const {
  const std::size_t expected = config_.variant == Variant::kSingle ? 1 : 2;
  for (const auto& input : batch) {
    if (input.variant != config_.variant || input.streams.size() != expected) {
      throw Error(ErrorCode::kShapeMismatch,
                  "input variant does not match the model variant");
    }
  }
}

Matrix StanceModel::Representations(std::span<const EncodedInput> batch,
                                    Mode mode) {
  CheckBatch(batch);
  const auto h1 = static_cast<Eigen::Index>(pair_encoder_.hidden());
  Matrix reps(static_cast<Eigen::Index>(batch.size()),
              static_cast<Eigen::Index>(head_input_width()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    reps.row(r).head(h1) =
        pair_encoder_.Forward(batch[i].streams[0], mode, rng_, nullptr);
    if (knowledge_encoder_) {
      reps.row(r).tail(reps.cols() - h1) =
          knowledge_encoder_->Forward(batch[i].streams[1], mode, rng_, nullptr);
    }
  }
  return reps;
}

Matrix StanceModel::Forward(std::span<const EncodedInput> batch, Mode mode) {
  Matrix reps = Representations(batch, mode);
  Matrix mask =
      DropoutMask(reps.rows(), reps.cols(), config_.head_dropout, mode, rng_);
  return head_.Forward(reps.cwiseProduct(mask));
}

double StanceModel::ForwardBackward(std::span<const EncodedInput> batch,
                                    const std::vector<int>& gold) {
  CheckBatch(batch);
  if (gold.size() != batch.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one gold label per example needed");
  }
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto h1 = static_cast<Eigen::Index>(pair_encoder_.hidden());
  const auto width = static_cast<Eigen::Index>(head_input_width());
  std::vector<TransformerEncoder::Cache> pair_caches(batch.size());
  std::vector<TransformerEncoder::Cache> knowledge_caches(
      knowledge_encoder_ ? batch.size() : 0);
  Matrix reps(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& input = batch[static_cast<std::size_t>(i)];
    reps.row(i).head(h1) = pair_encoder_.Forward(
        input.streams[0], Mode::kTrain, rng_,
        &pair_caches[static_cast<std::size_t>(i)]);
    if (knowledge_encoder_) {
      reps.row(i).tail(width - h1) = knowledge_encoder_->Forward(
          input.streams[1], Mode::kTrain, rng_,
          &knowledge_caches[static_cast<std::size_t>(i)]);
    }
  }
  Matrix mask = DropoutMask(n, width, config_.head_dropout, Mode::kTrain, rng_);
  Matrix dropped = reps.cwiseProduct(mask);
  Matrix logits = head_.Forward(dropped);
  Matrix d_logits;
  double loss = CrossEntropy(logits, gold, &d_logits);
  Matrix d_reps = head_.Backward(dropped, d_logits).cwiseProduct(mask);
  for (Eigen::Index i = 0; i < n; ++i) {
    pair_encoder_.Backward(d_reps.row(i).head(h1),
                           pair_caches[static_cast<std::size_t>(i)]);
    if (knowledge_encoder_) {
      knowledge_encoder_->Backward(d_reps.row(i).tail(width - h1),
                                   knowledge_caches[static_cast<std::size_t>(i)]);
    }
  }
  return loss;
}

void StanceModel::FreezeKnowledgeEncoder(std::optional<std::size_t> top_k) {
  if (!knowledge_encoder_) {
    throw Error(ErrorCode::kInvalidLayerCount,
                "the single variant has no knowledge encoder to freeze");
  }
  if (top_k) {
    knowledge_encoder_->FreezeBelowTop(*top_k);
  } else {
    knowledge_encoder_->Unfreeze();
  }
  config_.wiki_finetune_top_layers = top_k;
}

std::vector<Parameter*> StanceModel::Parameters() {
  std::vector<Parameter*> out = pair_encoder_.Parameters();
  if (knowledge_encoder_) {
    auto more = knowledge_encoder_->Parameters();
    out.insert(out.end(), more.begin(), more.end());
  }
  head_.CollectParameters(out);
  return out;
}

std::vector<Parameter*> StanceModel::HeadParameters() {
  std::vector<Parameter*> out;
  head_.CollectParameters(out);
  return out;
}

void StanceModel::ZeroGrad() {
  for (auto* p : Parameters()) p->ZeroGrad();
}

std::vector<Matrix> StanceModel::SnapshotValues() {
  std::vector<Matrix> values;
  for (auto* p : Parameters()) values.push_back(p->value);
  return values;
}

void StanceModel::RestoreValues(const std::vector<Matrix>& values) {
  auto params = Parameters();
  if (params.size() != values.size()) {
    throw Error(ErrorCode::kShapeMismatch, "snapshot does not fit this model");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void StanceModel::Save(const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["kind"] = "stance_model";
  meta["config"] = config_.ToJson();
  meta["pair_encoder"] = {{"config", pair_encoder_.config().ToJson()},
                          {"tokenizer", pair_encoder_.tokenizer().ToJson()}};
  if (knowledge_encoder_) {
    meta["knowledge_encoder"] = {
        {"config", knowledge_encoder_->config().ToJson()},
        {"tokenizer", knowledge_encoder_->tokenizer().ToJson()}};
  }
  std::vector<const Parameter*> params;
  for (auto* p : Parameters()) params.push_back(p);
  WriteTensorFile(path, meta, params);
}

StanceModel StanceModel::Load(const std::filesystem::path& path) {
  TensorFile file = ReadTensorFile(path);
  if (file.meta.value("kind", "") != "stance_model") {
    throw Error(ErrorCode::kSchemaMismatch,
                path.string() + " is not a stance model checkpoint");
  }
  ModelConfig config = ModelConfig::FromJson(file.meta.at("config"));
  auto make = [&](const char* key, const char* name) {
    const auto& j = file.meta.at(key);
    return TransformerEncoder(name, EncoderConfig::FromJson(j.at("config")),
                              Tokenizer::FromJson(j.at("tokenizer")));
  };
  std::optional<TransformerEncoder> knowledge;
  if (config.variant == Variant::kDual) {
    knowledge = make("knowledge_encoder", "knowledge_encoder");
  }
  StanceModel model(config, make("pair_encoder", "pair_encoder"),
                    std::move(knowledge), 0);
  AssignTensors(file, model.Parameters());
  return model;
}

TransformerEncoder CreateEncoder(const std::string& checkpoint_id,
                                 const std::string& name,
                                 const Tokenizer& tokenizer, Rng& rng) {
  if (IsMiniSpec(checkpoint_id)) {
    EncoderConfig config = EncoderConfig::FromMiniSpec(checkpoint_id);
    config.vocab_size = tokenizer.vocab_size();
    TransformerEncoder encoder(name, config, tokenizer);
    encoder.Init(rng);
    return encoder;
  }
  if (!std::filesystem::exists(checkpoint_id)) {
    throw Error(ErrorCode::kMissingFile,
                "encoder checkpoint '" + checkpoint_id +
                    "' is neither a mini spec nor an existing file");
  }
  return TransformerEncoder::Load(checkpoint_id, name);
}

}  // namespace wsbert
