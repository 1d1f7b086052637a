#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wsbert/tokenizer.hpp"

namespace wsbert {

enum class Variant { kSingle, kDual };

std::string_view VariantName(Variant variant);
Variant ParseVariant(std::string_view text);

struct TokenStream {
  std::vector<int> ids;
  std::vector<int> type_ids;
  // 1 on real tokens, 0 on padding.
  std::vector<int> mask;

  std::size_t length() const { return ids.size(); }
  std::size_t content_length() const;
  bool operator==(const TokenStream&) const = default;
};

// Single: streams = {merged document/target/knowledge stream}.
// Dual: streams = {document/target pair stream, knowledge stream}.
struct EncodedInput {
  Variant variant = Variant::kSingle;
  std::vector<TokenStream> streams;

  std::vector<std::size_t> lengths() const;
};

struct SingleText {
  std::string segment_a;
  std::string segment_b;
};

struct DualTexts {
  std::pair<std::string, std::string> pair;
  std::string knowledge;
};

// Segment A is "Text: {document} Target: {target}", segment B the knowledge.
// Throws Error(kEmptyField).
SingleText BuildSingleText(std::string_view document, std::string_view target,
                           std::string_view knowledge);

DualTexts BuildDualTexts(std::string_view document, std::string_view target,
                         std::string_view knowledge);

inline constexpr std::size_t kKnowledgeTokenLimit = 512;
// [CLS] A [SEP] B [SEP]
inline constexpr std::size_t kPairSpecialTokens = 3;
// [CLS] A [SEP]
inline constexpr std::size_t kSingleSegmentSpecialTokens = 2;
inline constexpr std::size_t kMinSingleBudget = 8;

// Head truncation: keeps the first min(size, max_tokens) tokens.
std::vector<int> TruncateKnowledge(std::span<const int> tokens,
                                   std::size_t max_tokens = kKnowledgeTokenLimit);

// Shrinks the knowledge segment first, then the document/target segment,
// until [CLS] A [SEP] B [SEP] fits model_max; neither drops below one token.
// Throws Error(kBudgetImpossible) for model_max < kMinSingleBudget.
std::pair<std::vector<int>, std::vector<int>> FitSingleBudget(
    std::span<const int> segment_a, std::span<const int> segment_b,
    std::size_t model_max);

// Same contract for the dual pair stream: the document is cut first, the
// target last.
std::pair<std::vector<int>, std::vector<int>> FitPairBudget(
    std::span<const int> document, std::span<const int> target,
    std::size_t model_max);

TokenStream MakePairStream(std::span<const int> segment_a,
                           std::span<const int> segment_b);
TokenStream MakeSegmentStream(std::span<const int> segment);

// Non-special ids of one segment of a pair stream (0 = A, 1 = B).
std::vector<int> SegmentIds(const TokenStream& stream, int segment);

struct EncoderLimits {
  std::size_t pair_max_positions = 512;
  std::size_t knowledge_max_positions = 512;
  std::size_t knowledge_token_limit = kKnowledgeTokenLimit;
};

// Turns (document, target, knowledge) into model-ready streams.
class InputEncoder {
 public:
  // Single variant: only pair_tokenizer is used; knowledge_tokenizer may be
  // null.
  InputEncoder(Variant variant, const Tokenizer* pair_tokenizer,
               const Tokenizer* knowledge_tokenizer, EncoderLimits limits);

  EncodedInput Encode(std::string_view document, std::string_view target,
                      std::string_view knowledge) const;

  // Readable streams with special tokens, one line per stream.
  std::string Dump(const EncodedInput& input) const;

  Variant variant() const { return variant_; }

 private:
  Variant variant_;
  const Tokenizer* pair_tokenizer_;
  const Tokenizer* knowledge_tokenizer_;
  EncoderLimits limits_;
};

// Pads every stream index to the longest stream in the batch.
std::vector<EncodedInput> PadBatch(std::span<const EncodedInput> batch);

}  // namespace wsbert
