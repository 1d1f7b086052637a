#include "wsbert/encoding.hpp"

#include <algorithm>
#include <numeric>

#include "wsbert/error.hpp"
#include "wsbert/knowledge.hpp"

namespace wsbert {

namespace {

void RequireField(std::string_view value, std::string_view name) {
  if (Trim(value).empty()) {
    throw Error(ErrorCode::kEmptyField, std::string(name) + " is empty");
  }
}

// `cut` shrinks before `keep`; both stay >= 1 token.
std::pair<std::vector<int>, std::vector<int>> FitTwoSegments(
    std::span<const int> keep, std::span<const int> cut, std::size_t budget) {
  std::size_t keep_len = keep.size();
  std::size_t cut_len = cut.size();
  if (keep_len + cut_len > budget) {
    std::size_t room_for_cut =
        budget > keep_len ? budget - keep_len : std::size_t{0};
    cut_len = std::max<std::size_t>(std::min(cut_len, room_for_cut), 1);
    if (keep_len + cut_len > budget) {
      keep_len = std::max<std::size_t>(budget - cut_len, 1);
    }
  }
  return {std::vector<int>(keep.begin(), keep.begin() + keep_len),
          std::vector<int>(cut.begin(), cut.begin() + cut_len)};
}

}  // namespace

std::string_view VariantName(Variant variant) {
  return variant == Variant::kSingle ? "single" : "dual";
}

Variant ParseVariant(std::string_view text) {
  if (text == "single") return Variant::kSingle;
  if (text == "dual") return Variant::kDual;
  throw Error(ErrorCode::kConfigInvalid,
              "unknown variant '" + std::string(text) + "'");
}

std::size_t TokenStream::content_length() const {
  return static_cast<std::size_t>(std::accumulate(mask.begin(), mask.end(), 0));
}

std::vector<std::size_t> EncodedInput::lengths() const {
  std::vector<std::size_t> out;
  for (const auto& s : streams) out.push_back(s.length());
  return out;
}

SingleText BuildSingleText(std::string_view document, std::string_view target,
                           std::string_view knowledge) {
  RequireField(document, "document");
  RequireField(target, "target");
  RequireField(knowledge, "knowledge");
  SingleText text;
  text.segment_a.reserve(document.size() + target.size() + 14);
  text.segment_a.append("Text: ").append(document).append(" Target: ").append(
      target);
  text.segment_b = std::string(knowledge);
  return text;
}

DualTexts BuildDualTexts(std::string_view document, std::string_view target,
                         std::string_view knowledge) {
  RequireField(document, "document");
  RequireField(target, "target");
  RequireField(knowledge, "knowledge");
  return {{std::string(document), std::string(target)}, std::string(knowledge)};
}

std::vector<int> TruncateKnowledge(std::span<const int> tokens,
                                   std::size_t max_tokens) {
  std::size_t n = std::min(tokens.size(), max_tokens);
  return {tokens.begin(), tokens.begin() + n};
}

std::pair<std::vector<int>, std::vector<int>> FitSingleBudget(
    std::span<const int> segment_a, std::span<const int> segment_b,
    std::size_t model_max) {
  if (model_max < kMinSingleBudget) {
    throw Error(ErrorCode::kBudgetImpossible,
                "model_max " + std::to_string(model_max) + " is below " +
                    std::to_string(kMinSingleBudget));
  }
  return FitTwoSegments(segment_a, segment_b, model_max - kPairSpecialTokens);
}

std::pair<std::vector<int>, std::vector<int>> FitPairBudget(
    std::span<const int> document, std::span<const int> target,
    std::size_t model_max) {
  if (model_max < kMinSingleBudget) {
    throw Error(ErrorCode::kBudgetImpossible,
                "model_max " + std::to_string(model_max) + " is below " +
                    std::to_string(kMinSingleBudget));
  }
  auto [kept_target, cut_document] =
      FitTwoSegments(target, document, model_max - kPairSpecialTokens);
  return {std::move(cut_document), std::move(kept_target)};
}

TokenStream MakePairStream(std::span<const int> segment_a,
                           std::span<const int> segment_b) {
  TokenStream s;
  s.ids.push_back(Tokenizer::kCls);
  s.ids.insert(s.ids.end(), segment_a.begin(), segment_a.end());
  s.ids.push_back(Tokenizer::kSep);
  s.type_ids.assign(s.ids.size(), 0);
  s.ids.insert(s.ids.end(), segment_b.begin(), segment_b.end());
  s.ids.push_back(Tokenizer::kSep);
  s.type_ids.resize(s.ids.size(), 1);
  s.mask.assign(s.ids.size(), 1);
  return s;
}

TokenStream MakeSegmentStream(std::span<const int> segment) {
  TokenStream s;
  s.ids.push_back(Tokenizer::kCls);
  s.ids.insert(s.ids.end(), segment.begin(), segment.end());
  s.ids.push_back(Tokenizer::kSep);
  s.type_ids.assign(s.ids.size(), 0);
  s.mask.assign(s.ids.size(), 1);
  return s;
}

std::vector<int> SegmentIds(const TokenStream& stream, int segment) {
  std::vector<int> out;
  for (std::size_t i = 0; i < stream.ids.size(); ++i) {
    if (stream.mask[i] == 1 && stream.type_ids[i] == segment &&
        !Tokenizer::IsSpecial(stream.ids[i])) {
      out.push_back(stream.ids[i]);
    }
  }
  return out;
}

InputEncoder::InputEncoder(Variant variant, const Tokenizer* pair_tokenizer,
                           const Tokenizer* knowledge_tokenizer,
                           EncoderLimits limits)
    : variant_(variant),
      pair_tokenizer_(pair_tokenizer),
      knowledge_tokenizer_(knowledge_tokenizer),
      limits_(limits) {
  if (pair_tokenizer_ == nullptr ||
      (variant_ == Variant::kDual && knowledge_tokenizer_ == nullptr)) {
    throw Error(ErrorCode::kConfigInvalid, "input encoder is missing a tokenizer");
  }
}

EncodedInput InputEncoder::Encode(std::string_view document,
                                  std::string_view target,
                                  std::string_view knowledge) const {
  EncodedInput input;
  input.variant = variant_;
  if (variant_ == Variant::kSingle) {
    SingleText text = BuildSingleText(document, target, knowledge);
    std::vector<int> a = pair_tokenizer_->Encode(text.segment_a);
    std::vector<int> b = TruncateKnowledge(
        pair_tokenizer_->Encode(text.segment_b), limits_.knowledge_token_limit);
    auto [fa, fb] = FitSingleBudget(a, b, limits_.pair_max_positions);
    input.streams.push_back(MakePairStream(fa, fb));
    return input;
  }

  DualTexts texts = BuildDualTexts(document, target, knowledge);
  std::vector<int> d = pair_tokenizer_->Encode(texts.pair.first);
  std::vector<int> t = pair_tokenizer_->Encode(texts.pair.second);
  auto [fd, ft] = FitPairBudget(d, t, limits_.pair_max_positions);
  input.streams.push_back(MakePairStream(fd, ft));

  std::vector<int> w = TruncateKnowledge(
      knowledge_tokenizer_->Encode(texts.knowledge),
      limits_.knowledge_token_limit);
  if (limits_.knowledge_max_positions < kSingleSegmentSpecialTokens + 1) {
    throw Error(ErrorCode::kBudgetImpossible,
                "knowledge encoder has too few positions");
  }
  std::size_t room =
      limits_.knowledge_max_positions - kSingleSegmentSpecialTokens;
  if (w.size() > room) w.resize(room);
  input.streams.push_back(MakeSegmentStream(w));
  return input;
}

std::string InputEncoder::Dump(const EncodedInput& input) const {
  std::string out;
  for (std::size_t s = 0; s < input.streams.size(); ++s) {
    const Tokenizer* tok =
        (s == 0 || knowledge_tokenizer_ == nullptr) ? pair_tokenizer_
                                                    : knowledge_tokenizer_;
    const auto& stream = input.streams[s];
    std::vector<int> content;
    for (std::size_t i = 0; i < stream.ids.size(); ++i) {
      if (stream.mask[i] == 1) content.push_back(stream.ids[i]);
    }
    out += "stream " + std::to_string(s) + " (" +
           std::to_string(content.size()) + " tokens): " + tok->Render(content) +
           "\n";
  }
  return out;
}

std::vector<EncodedInput> PadBatch(std::span<const EncodedInput> batch) {
  std::vector<EncodedInput> padded(batch.begin(), batch.end());
  if (padded.empty()) return padded;
  std::size_t num_streams = padded.front().streams.size();
  for (std::size_t s = 0; s < num_streams; ++s) {
    std::size_t longest = 0;
    for (const auto& input : padded) {
      if (input.streams.size() != num_streams) {
        throw Error(ErrorCode::kShapeMismatch, "mixed variants in one batch");
      }
      longest = std::max(longest, input.streams[s].length());
    }
    for (auto& input : padded) {
      auto& stream = input.streams[s];
      stream.ids.resize(longest, Tokenizer::kPad);
      stream.type_ids.resize(longest, 0);
      stream.mask.resize(longest, 0);
    }
  }
  return padded;
}

}  // namespace wsbert
