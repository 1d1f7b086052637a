#include "wsbert/transformer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "wsbert/checkpoint_io.hpp"
#include "wsbert/error.hpp"

namespace wsbert {

void EncoderConfig::Validate() const {
  auto fail = [](const std::string& m) {
    throw Error(ErrorCode::kConfigInvalid, "encoder config: " + m);
  };
  if (vocab_size == 0) fail("vocab_size must be positive");
  if (hidden == 0 || layers == 0 || heads == 0 || intermediate == 0) {
    fail("hidden, layers, heads and intermediate must be positive");
  }
  if (hidden % heads != 0) fail("hidden must be divisible by heads");
  if (max_positions < kMinSingleBudget) fail("max_positions too small");
  if (type_vocab < 2) fail("type_vocab must be at least 2");
  if (hidden_dropout < 0 || hidden_dropout >= 1 || attention_dropout < 0 ||
      attention_dropout >= 1) {
    fail("dropout rates must lie in [0, 1)");
  }
}

nlohmann::json EncoderConfig::ToJson() const {
  return {{"vocab_size", vocab_size},
          {"hidden", hidden},
          {"layers", layers},
          {"heads", heads},
          {"intermediate", intermediate},
          {"max_positions", max_positions},
          {"type_vocab", type_vocab},
          {"hidden_dropout", hidden_dropout},
          {"attention_dropout", attention_dropout},
          {"layer_norm_eps", layer_norm_eps},
          {"init_range", init_range}};
}

EncoderConfig EncoderConfig::FromJson(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.intermediate = j.at("intermediate").get<std::size_t>();
  c.max_positions = j.at("max_positions").get<std::size_t>();
  c.type_vocab = j.value("type_vocab", std::size_t{2});
  c.hidden_dropout = j.value("hidden_dropout", 0.1);
  c.attention_dropout = j.value("attention_dropout", 0.1);
  c.layer_norm_eps = j.value("layer_norm_eps", 1e-12);
  c.init_range = j.value("init_range", 0.02);
  return c;
}

bool IsMiniSpec(std::string_view checkpoint_id) {
  return checkpoint_id.starts_with("mini:") || checkpoint_id == "mini";
}

EncoderConfig EncoderConfig::FromMiniSpec(std::string_view spec) {
  if (!IsMiniSpec(spec)) {
    throw Error(ErrorCode::kConfigInvalid,
                "not a mini encoder spec: " + std::string(spec));
  }
  EncoderConfig c;
  std::string body =
      spec.size() > 5 ? std::string(spec.substr(5)) : std::string();
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfigInvalid, "bad mini spec item '" + item + "'");
    }
    std::string key = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    try {
      if (key == "layers") c.layers = std::stoul(value);
      else if (key == "hidden") c.hidden = std::stoul(value);
      else if (key == "heads") c.heads = std::stoul(value);
      else if (key == "intermediate") c.intermediate = std::stoul(value);
      else if (key == "positions") c.max_positions = std::stoul(value);
      else if (key == "dropout") c.hidden_dropout = c.attention_dropout = std::stod(value);
      else if (key == "init") c.init_range = std::stod(value);
      else throw Error(ErrorCode::kConfigInvalid, "unknown mini spec key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kConfigInvalid, "bad value in mini spec item '" + item + "'");
    }
  }
  return c;
}

EncoderLayer::EncoderLayer(const std::string& prefix,
                           const EncoderConfig& config)
    : heads_(config.heads),
      attention_dropout_(config.attention_dropout),
      hidden_dropout_(config.hidden_dropout) {
  const auto h = static_cast<Eigen::Index>(config.hidden);
  const auto f = static_cast<Eigen::Index>(config.intermediate);
  query_ = Linear(prefix + ".attention.query", h, h);
  key_ = Linear(prefix + ".attention.key", h, h);
  value_ = Linear(prefix + ".attention.value", h, h);
  attn_out_ = Linear(prefix + ".attention.output", h, h);
  ln1_ = LayerNorm(prefix + ".attention.layer_norm", h, config.layer_norm_eps);
  ffn_in_ = Linear(prefix + ".ffn.intermediate", h, f);
  ffn_out_ = Linear(prefix + ".ffn.output", f, h);
  ln2_ = LayerNorm(prefix + ".ffn.layer_norm", h, config.layer_norm_eps);
}

void EncoderLayer::Init(double stddev, Rng& rng) {
  for (Linear* l : {&query_, &key_, &value_, &attn_out_, &ffn_in_, &ffn_out_}) {
    l->Init(stddev, rng);
  }
}

Matrix EncoderLayer::Forward(const Matrix& x, const std::vector<int>& key_mask,
                             Mode mode, Rng& rng, Cache* cache) const {
  const Eigen::Index len = x.rows();
  const Eigen::Index width = x.cols();
  const Eigen::Index dh = width / static_cast<Eigen::Index>(heads_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  Matrix q = query_.Forward(x);
  Matrix k = key_.Forward(x);
  Matrix v = value_.Forward(x);
  Matrix context(len, width);
  std::vector<Matrix> probs(heads_), prob_masks(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
    Matrix scores = q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose();
    scores *= scale;
    for (Eigen::Index j = 0; j < len; ++j) {
      if (key_mask[j] == 0) scores.col(j).setConstant(kNegInf);
    }
    probs[h] = Softmax(scores);
    prob_masks[h] = DropoutMask(len, len, attention_dropout_, mode, rng);
    Matrix dropped = probs[h].cwiseProduct(prob_masks[h]);
    context.middleCols(c0, dh) = dropped * v.middleCols(c0, dh);
  }
  Matrix attn = attn_out_.Forward(context);
  Matrix attn_mask = DropoutMask(len, width, hidden_dropout_, mode, rng);
  LayerNorm::Cache ln1_cache;
  Matrix h1 = ln1_.Forward(x + attn.cwiseProduct(attn_mask), &ln1_cache);

  Matrix ffn_pre = ffn_in_.Forward(h1);
  Matrix ffn_act = Gelu(ffn_pre);
  Matrix ffn = ffn_out_.Forward(ffn_act);
  Matrix ffn_mask = DropoutMask(len, width, hidden_dropout_, mode, rng);
  LayerNorm::Cache ln2_cache;
  Matrix y = ln2_.Forward(h1 + ffn.cwiseProduct(ffn_mask), &ln2_cache);

  if (cache != nullptr) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->prob_masks = std::move(prob_masks);
    cache->context = std::move(context);
    cache->attn_out_mask = std::move(attn_mask);
    cache->ln1 = std::move(ln1_cache);
    cache->h1 = std::move(h1);
    cache->ffn_pre = std::move(ffn_pre);
    cache->ffn_act = std::move(ffn_act);
    cache->ffn_out_mask = std::move(ffn_mask);
    cache->ln2 = std::move(ln2_cache);
  }
  return y;
}

Matrix EncoderLayer::Backward(const Matrix& dy, const Cache& c) {
  const Eigen::Index width = dy.cols();
  const Eigen::Index dh = width / static_cast<Eigen::Index>(heads_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dz2 = ln2_.Backward(dy, c.ln2);
  Matrix d_ffn = dz2.cwiseProduct(c.ffn_out_mask);
  Matrix d_act = ffn_out_.Backward(c.ffn_act, d_ffn);
  Matrix d_pre = d_act.cwiseProduct(GeluGrad(c.ffn_pre));
  Matrix dh1 = ffn_in_.Backward(c.h1, d_pre) + dz2;

  Matrix dz1 = ln1_.Backward(dh1, c.ln1);
  Matrix d_attn = dz1.cwiseProduct(c.attn_out_mask);
  Matrix d_context = attn_out_.Backward(c.context, d_attn);

  Matrix dq(dy.rows(), width), dk(dy.rows(), width), dv(dy.rows(), width);
  for (std::size_t h = 0; h < heads_; ++h) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
    const Matrix& p = c.probs[h];
    Matrix dropped = p.cwiseProduct(c.prob_masks[h]);
    Matrix d_ctx_h = d_context.middleCols(c0, dh);
    dv.middleCols(c0, dh) = dropped.transpose() * d_ctx_h;
    Matrix d_probs =
        (d_ctx_h * c.v.middleCols(c0, dh).transpose()).cwiseProduct(c.prob_masks[h]);
    Eigen::VectorXd row_dot = (d_probs.cwiseProduct(p)).rowwise().sum();
    Matrix d_scores = p.cwiseProduct(d_probs.colwise() - row_dot);
    d_scores *= scale;
    dq.middleCols(c0, dh) = d_scores * c.k.middleCols(c0, dh);
    dk.middleCols(c0, dh) = d_scores.transpose() * c.q.middleCols(c0, dh);
  }
  Matrix dx = dz1;
  dx += query_.Backward(c.input, dq);
  dx += key_.Backward(c.input, dk);
  dx += value_.Backward(c.input, dv);
  return dx;
}

void EncoderLayer::SetTrainable(bool trainable) {
  for (Linear* l : {&query_, &key_, &value_, &attn_out_, &ffn_in_, &ffn_out_}) {
    l->SetTrainable(trainable);
  }
  ln1_.SetTrainable(trainable);
  ln2_.SetTrainable(trainable);
}

bool EncoderLayer::AnyTrainable() {
  std::vector<Parameter*> params;
  CollectParameters(params);
  for (auto* p : params) {
    if (p->trainable) return true;
  }
  return false;
}

void EncoderLayer::CollectParameters(std::vector<Parameter*>& out) {
  query_.CollectParameters(out);
  key_.CollectParameters(out);
  value_.CollectParameters(out);
  attn_out_.CollectParameters(out);
  ln1_.CollectParameters(out);
  ffn_in_.CollectParameters(out);
  ffn_out_.CollectParameters(out);
  ln2_.CollectParameters(out);
}

TransformerEncoder::TransformerEncoder(std::string name, EncoderConfig config,
                                       Tokenizer tokenizer)
    : name_(std::move(name)), config_(config), tokenizer_(std::move(tokenizer)) {
  if (config_.vocab_size == 0) config_.vocab_size = tokenizer_.vocab_size();
  if (config_.vocab_size != tokenizer_.vocab_size()) {
    throw Error(ErrorCode::kConfigInvalid,
                name_ + ": vocab_size disagrees with its tokenizer");
  }
  config_.Validate();
  const auto h = static_cast<Eigen::Index>(config_.hidden);
  word_embeddings_ = Parameter(name_ + ".embeddings.word",
                               static_cast<Eigen::Index>(config_.vocab_size), h);
  position_embeddings_ = Parameter(
      name_ + ".embeddings.position",
      static_cast<Eigen::Index>(config_.max_positions), h);
  type_embeddings_ = Parameter(name_ + ".embeddings.token_type",
                               static_cast<Eigen::Index>(config_.type_vocab), h);
  embed_ln_ = LayerNorm(name_ + ".embeddings.layer_norm", h,
                        config_.layer_norm_eps);
  for (std::size_t i = 0; i < config_.layers; ++i) {
    layers_.emplace_back(name_ + ".layer" + std::to_string(i), config_);
  }
  pooler_ = Linear(name_ + ".pooler", h, h);
}

void TransformerEncoder::Init(Rng& rng) {
  InitNormal(word_embeddings_, config_.init_range, rng);
  InitNormal(position_embeddings_, config_.init_range, rng);
  InitNormal(type_embeddings_, config_.init_range, rng);
  for (auto& layer : layers_) layer.Init(config_.init_range, rng);
  pooler_.Init(config_.init_range, rng);
}

RowVector TransformerEncoder::Forward(const TokenStream& stream, Mode mode,
                                      Rng& rng, Cache* cache) const {
  const std::size_t len = stream.ids.size();
  if (len == 0 || len > config_.max_positions) {
    throw Error(ErrorCode::kShapeMismatch,
                name_ + ": stream of " + std::to_string(len) +
                    " tokens for " + std::to_string(config_.max_positions) +
                    " positions");
  }
  if (stream.type_ids.size() != len || stream.mask.size() != len) {
    throw Error(ErrorCode::kShapeMismatch, name_ + ": ragged token stream");
  }
  const auto h = static_cast<Eigen::Index>(config_.hidden);
  Matrix embed(static_cast<Eigen::Index>(len), h);
  for (std::size_t i = 0; i < len; ++i) {
    int id = stream.ids[i];
    int type = stream.type_ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size ||
        type < 0 || static_cast<std::size_t>(type) >= config_.type_vocab) {
      throw Error(ErrorCode::kShapeMismatch,
                  name_ + ": token or type id outside the embedding tables");
    }
    const auto r = static_cast<Eigen::Index>(i);
    embed.row(r) = word_embeddings_.value.row(id) +
                   position_embeddings_.value.row(r) +
                   type_embeddings_.value.row(type);
  }
  LayerNorm::Cache ln_cache;
  Matrix x = embed_ln_.Forward(embed, &ln_cache);
  Matrix embed_mask =
      DropoutMask(x.rows(), x.cols(), config_.hidden_dropout, mode, rng);
  x = x.cwiseProduct(embed_mask);

  std::vector<EncoderLayer::Cache> layer_caches(
      cache != nullptr ? layers_.size() : 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].Forward(x, stream.mask, mode, rng,
                           cache != nullptr ? &layer_caches[i] : nullptr);
  }
  Matrix cls = x.topRows(1);
  Matrix pooled = pooler_.Forward(cls).array().tanh().matrix();

  if (cache != nullptr) {
    cache->ids = stream.ids;
    cache->type_ids = stream.type_ids;
    cache->embed_ln = std::move(ln_cache);
    cache->embed_mask = std::move(embed_mask);
    cache->layers = std::move(layer_caches);
    cache->cls = cls;
    cache->pooled = pooled;
  }
  return pooled.row(0);
}

void TransformerEncoder::Backward(const RowVector& d_pooled, const Cache& c) {
  Matrix d_pre = d_pooled.array() * (1.0 - c.pooled.row(0).array().square());
  Matrix d_cls = pooler_.Backward(c.cls, d_pre);

  const bool embeddings_trainable = word_embeddings_.trainable ||
                                    position_embeddings_.trainable ||
                                    type_embeddings_.trainable ||
                                    embed_ln_.gamma.trainable ||
                                    embed_ln_.beta.trainable;
  // Lowest layer that still needs a gradient; nothing below it is touched.
  std::ptrdiff_t lowest = static_cast<std::ptrdiff_t>(layers_.size());
  if (embeddings_trainable) {
    lowest = -1;
  } else {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].AnyTrainable()) {
        lowest = static_cast<std::ptrdiff_t>(i);
        break;
      }
    }
  }

  const auto len = static_cast<Eigen::Index>(c.ids.size());
  Matrix dx = Matrix::Zero(len, d_cls.cols());
  dx.row(0) = d_cls.row(0);
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(layers_.size()) - 1;
       i >= std::max<std::ptrdiff_t>(lowest, 0); --i) {
    dx = layers_[static_cast<std::size_t>(i)].Backward(
        dx, c.layers[static_cast<std::size_t>(i)]);
  }
  if (!embeddings_trainable) return;

  Matrix d_embed = embed_ln_.Backward(dx.cwiseProduct(c.embed_mask), c.embed_ln);
  for (Eigen::Index r = 0; r < len; ++r) {
    if (word_embeddings_.trainable) {
      word_embeddings_.grad.row(c.ids[r]) += d_embed.row(r);
    }
    if (position_embeddings_.trainable) {
      position_embeddings_.grad.row(r) += d_embed.row(r);
    }
    if (type_embeddings_.trainable) {
      type_embeddings_.grad.row(c.type_ids[r]) += d_embed.row(r);
    }
  }
}

void TransformerEncoder::FreezeBelowTop(std::size_t top_k) {
  if (top_k < 1 || top_k > layers_.size()) {
    throw Error(ErrorCode::kInvalidLayerCount,
                name_ + ": cannot finetune top " + std::to_string(top_k) +
                    " of " + std::to_string(layers_.size()) + " layers");
  }
  Unfreeze();
  for (auto* p : EmbeddingParameters()) p->trainable = false;
  for (std::size_t i = 0; i + top_k < layers_.size(); ++i) {
    layers_[i].SetTrainable(false);
  }
}

void TransformerEncoder::Unfreeze() {
  for (auto* p : Parameters()) p->trainable = true;
}

std::vector<Parameter*> TransformerEncoder::EmbeddingParameters() {
  std::vector<Parameter*> out = {&word_embeddings_, &position_embeddings_,
                                 &type_embeddings_};
  embed_ln_.CollectParameters(out);
  return out;
}

std::vector<Parameter*> TransformerEncoder::LayerParameters(std::size_t layer) {
  std::vector<Parameter*> out;
  layers_.at(layer).CollectParameters(out);
  return out;
}

std::vector<Parameter*> TransformerEncoder::PoolerParameters() {
  std::vector<Parameter*> out;
  pooler_.CollectParameters(out);
  return out;
}

std::vector<Parameter*> TransformerEncoder::Parameters() {
  std::vector<Parameter*> out = EmbeddingParameters();
  for (auto& layer : layers_) layer.CollectParameters(out);
  pooler_.CollectParameters(out);
  return out;
}

void TransformerEncoder::Save(const std::filesystem::path& path) {
  nlohmann::json meta = {{"kind", "encoder"},
                         {"config", config_.ToJson()},
                         {"tokenizer", tokenizer_.ToJson()}};
  std::vector<const Parameter*> params;
  for (auto* p : Parameters()) params.push_back(p);
  // Stored under a neutral prefix so the encoder can be reloaded under any name.
  std::vector<Parameter> renamed;
  renamed.reserve(params.size());
  for (const auto* p : params) {
    Parameter copy = *p;
    copy.name = p->name.substr(name_.size());
    renamed.push_back(std::move(copy));
  }
  std::vector<const Parameter*> view;
  for (const auto& p : renamed) view.push_back(&p);
  WriteTensorFile(path, meta, view);
}

TransformerEncoder TransformerEncoder::Load(const std::filesystem::path& path,
                                            std::string name) {
  TensorFile file = ReadTensorFile(path);
  if (file.meta.value("kind", "") != "encoder") {
    throw Error(ErrorCode::kSchemaMismatch,
                path.string() + " is not an encoder checkpoint");
  }
  TransformerEncoder encoder(name,
                             EncoderConfig::FromJson(file.meta.at("config")),
                             Tokenizer::FromJson(file.meta.at("tokenizer")));
  TensorFile renamed;
  for (auto& [key, value] : file.tensors) {
    renamed.tensors.emplace(name + key, value);
  }
  AssignTensors(renamed, encoder.Parameters());
  return encoder;
}

}  // namespace wsbert
