#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace wsbert {

// Lossless piece tokenizer: text is split into space-prefixed word and
// punctuation pieces; known pieces map to one id, everything else falls back
// to one id per byte. Decode(Encode(s)) == s for every byte string.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecial = 5;
  static constexpr int kFirstByte = kNumSpecial;
  static constexpr int kFirstPiece = kFirstByte + 256;

  // Byte-only vocabulary.
  Tokenizer();

  // Keeps the most frequent pieces (count >= min_count) until the vocabulary
  // reaches vocab_size ids.
  static Tokenizer Train(const std::vector<std::string>& corpus,
                         std::size_t vocab_size, std::size_t min_count = 1);

  static std::vector<std::string> PreTokenize(std::string_view text);

  std::vector<int> Encode(std::string_view text) const;
  std::string Decode(std::span<const int> ids) const;

  // Readable rendering with special tokens shown as [CLS], [SEP], ...
  std::string Render(std::span<const int> ids) const;

  std::size_t vocab_size() const { return kFirstPiece + pieces_.size(); }
  static bool IsSpecial(int id) { return id >= 0 && id < kNumSpecial; }

  nlohmann::json ToJson() const;
  static Tokenizer FromJson(const nlohmann::json& j);

  bool operator==(const Tokenizer& other) const {
    return pieces_ == other.pieces_;
  }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> piece_ids_;
};

}  // namespace wsbert
