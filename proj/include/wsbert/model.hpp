#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsbert/encoding.hpp"
#include "wsbert/nn.hpp"
#include "wsbert/transformer.hpp"

namespace wsbert {

struct ModelConfig {
  Variant variant = Variant::kDual;
  std::string pair_encoder_id;
  std::optional<std::string> knowledge_encoder_id;
  int num_labels = 3;
  // Top knowledge-encoder layers left trainable; empty means all of them.
  std::optional<std::size_t> wiki_finetune_top_layers;
  double head_dropout = 0.1;

  // Throws Error(kConfigInvalid).
  void Validate() const;
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Classifier over one merged stream (single) or the concatenation of a pair
// encoder and a knowledge encoder (dual), followed by one affine layer.
class StanceModel {
 public:
  StanceModel(ModelConfig config, TransformerEncoder pair_encoder,
              std::optional<TransformerEncoder> knowledge_encoder,
              std::uint64_t seed);

  // Pre-head representations, shape (batch, head_input_width()).
  Matrix Representations(std::span<const EncodedInput> batch, Mode mode);

  // Logits, shape (batch, num_labels).
  Matrix Forward(std::span<const EncodedInput> batch, Mode mode);

  // Mean cross-entropy of a training-mode forward pass; parameter gradients
  // are accumulated into Parameter::grad.
  double ForwardBackward(std::span<const EncodedInput> batch,
                         const std::vector<int>& gold);

  // Throws Error(kInvalidLayerCount) for the single variant or a count
  // outside [1, depth]; std::nullopt unfreezes the knowledge encoder.
  void FreezeKnowledgeEncoder(std::optional<std::size_t> top_k);

  std::vector<Parameter*> Parameters();
  std::vector<Parameter*> HeadParameters();
  void ZeroGrad();

  std::size_t head_input_width() const;
  const ModelConfig& config() const { return config_; }
  TransformerEncoder& pair_encoder() { return pair_encoder_; }
  TransformerEncoder* knowledge_encoder() {
    return knowledge_encoder_ ? &*knowledge_encoder_ : nullptr;
  }
  const Tokenizer& pair_tokenizer() const { return pair_encoder_.tokenizer(); }
  const Tokenizer* knowledge_tokenizer() const {
    return knowledge_encoder_ ? &knowledge_encoder_->tokenizer() : nullptr;
  }
  EncoderLimits limits() const;

  // Parameter values by name, for best-checkpoint snapshots.
  std::vector<Matrix> SnapshotValues();
  void RestoreValues(const std::vector<Matrix>& values);

  void Save(const std::filesystem::path& path);
  static StanceModel Load(const std::filesystem::path& path);

  Rng& rng() { return rng_; }

 private:
  void CheckBatch(std::span<const EncodedInput> batch) const;

  ModelConfig config_;
  TransformerEncoder pair_encoder_;
  std::optional<TransformerEncoder> knowledge_encoder_;
  Linear head_;
  Rng rng_;
};

// Builds an encoder from a checkpoint identifier: a "mini:..." spec is
// randomly initialised around `tokenizer`; anything else is read as an
// encoder checkpoint path (which carries its own tokenizer).
TransformerEncoder CreateEncoder(const std::string& checkpoint_id,
                                 const std::string& name,
                                 const Tokenizer& tokenizer, Rng& rng);

}  // namespace wsbert
