#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wsbert/encoding.hpp"
#include "wsbert/nn.hpp"
#include "wsbert/tokenizer.hpp"

namespace wsbert {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t intermediate = 128;
  std::size_t max_positions = 128;
  std::size_t type_vocab = 2;
  double hidden_dropout = 0.1;
  double attention_dropout = 0.1;
  double layer_norm_eps = 1e-12;
  double init_range = 0.02;

  // Throws Error(kConfigInvalid).
  void Validate() const;
  nlohmann::json ToJson() const;
  static EncoderConfig FromJson(const nlohmann::json& j);

  // "mini:layers=2,hidden=64,heads=4,intermediate=128,positions=128".
  // Unlisted keys keep their defaults; vocab_size comes from the tokenizer.
  static EncoderConfig FromMiniSpec(std::string_view spec);
};

bool IsMiniSpec(std::string_view checkpoint_id);

class EncoderLayer {
 public:
  struct Cache {
    Matrix input;
    Matrix q, k, v;
    std::vector<Matrix> probs;
    std::vector<Matrix> prob_masks;
    Matrix context;
    Matrix attn_out_mask;
    LayerNorm::Cache ln1;
    Matrix h1;
    Matrix ffn_pre;
    Matrix ffn_act;
    Matrix ffn_out_mask;
    LayerNorm::Cache ln2;
  };

  EncoderLayer() = default;
  EncoderLayer(const std::string& prefix, const EncoderConfig& config);

  void Init(double stddev, Rng& rng);
  // `key_mask` holds 1 for attendable positions.
  Matrix Forward(const Matrix& x, const std::vector<int>& key_mask, Mode mode,
                 Rng& rng, Cache* cache) const;
  Matrix Backward(const Matrix& dy, const Cache& cache);

  void SetTrainable(bool trainable);
  bool AnyTrainable();
  void CollectParameters(std::vector<Parameter*>& out);

 private:
  std::size_t heads_ = 1;
  double attention_dropout_ = 0.0;
  double hidden_dropout_ = 0.0;
  Linear query_, key_, value_, attn_out_;
  LayerNorm ln1_;
  Linear ffn_in_, ffn_out_;
  LayerNorm ln2_;
};

// BERT-style encoder: embeddings, post-norm transformer layers and a tanh
// pooler over the final [CLS] state. Owns the tokenizer its vocabulary was
// built with.
class TransformerEncoder {
 public:
  struct Cache {
    std::vector<int> ids;
    std::vector<int> type_ids;
    Matrix embed_sum;
    LayerNorm::Cache embed_ln;
    Matrix embed_mask;
    std::vector<EncoderLayer::Cache> layers;
    Matrix cls;
    Matrix pooled;
  };

  TransformerEncoder() = default;
  TransformerEncoder(std::string name, EncoderConfig config, Tokenizer tokenizer);

  void Init(Rng& rng);

  // Pooled representation, shape (1, hidden). Throws Error(kShapeMismatch)
  // for streams longer than max_positions or ids outside the vocabulary.
  RowVector Forward(const TokenStream& stream, Mode mode, Rng& rng,
                    Cache* cache) const;
  void Backward(const RowVector& d_pooled, const Cache& cache);

  // Freezes embeddings and every layer below the top `top_k`.
  // Throws Error(kInvalidLayerCount) unless 1 <= top_k <= depth.
  void FreezeBelowTop(std::size_t top_k);
  void Unfreeze();

  std::vector<Parameter*> Parameters();
  std::vector<Parameter*> EmbeddingParameters();
  std::vector<Parameter*> LayerParameters(std::size_t layer);
  std::vector<Parameter*> PoolerParameters();

  const EncoderConfig& config() const { return config_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const std::string& name() const { return name_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t hidden() const { return config_.hidden; }

  // Standalone encoder checkpoint: config, tokenizer and weights.
  void Save(const std::filesystem::path& path);
  static TransformerEncoder Load(const std::filesystem::path& path,
                                 std::string name);

 private:
  std::string name_;
  EncoderConfig config_;
  Tokenizer tokenizer_;
  Parameter word_embeddings_;
  Parameter position_embeddings_;
  Parameter type_embeddings_;
  LayerNorm embed_ln_;
  std::vector<EncoderLayer> layers_;
  Linear pooler_;
};

}  // namespace wsbert
