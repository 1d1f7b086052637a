#include "wsbert/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "wsbert/error.hpp"

namespace wsbert {

namespace {

bool IsWordByte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool IsSpaceByte(unsigned char c) { return std::isspace(c) != 0; }

constexpr const char* kSpecialNames[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]",
                                         "[MASK]"};

}  // namespace

Tokenizer::Tokenizer() = default;

std::vector<std::string> Tokenizer::PreTokenize(std::string_view text) {
  std::vector<std::string> pieces;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < n) {
    std::size_t start = i;
    if (text[i] == ' ' && i + 1 < n && !IsSpaceByte(at(i + 1))) ++i;
    if (IsSpaceByte(at(i))) {
      // Whitespace run, leaving a final ' ' to prefix the next piece.
      while (i < n && IsSpaceByte(at(i))) ++i;
      if (i < n && i - start > 1 && text[i - 1] == ' ') --i;
    } else if (IsWordByte(at(i))) {
      while (i < n && IsWordByte(at(i))) ++i;
    } else {
      ++i;
    }
    pieces.emplace_back(text.substr(start, i - start));
  }
  return pieces;
}

Tokenizer Tokenizer::Train(const std::vector<std::string>& corpus,
                           std::size_t vocab_size, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    for (auto& piece : PreTokenize(text)) {
      if (piece.size() > 1) ++counts[std::move(piece)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Tokenizer tokenizer;
  for (const auto& [piece, count] : ranked) {
    if (tokenizer.vocab_size() >= vocab_size || count < min_count) break;
    tokenizer.piece_ids_.emplace(piece, static_cast<int>(tokenizer.vocab_size()));
    tokenizer.pieces_.push_back(piece);
  }
  return tokenizer;
}

std::vector<int> Tokenizer::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& piece : PreTokenize(text)) {
    if (auto it = piece_ids_.find(piece); it != piece_ids_.end()) {
      ids.push_back(it->second);
      continue;
    }
    for (unsigned char c : piece) ids.push_back(kFirstByte + c);
  }
  return ids;
}

std::string Tokenizer::Decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (IsSpecial(id)) continue;
    if (id < kFirstPiece) {
      out.push_back(static_cast<char>(id - kFirstByte));
    } else if (static_cast<std::size_t>(id) < vocab_size()) {
      out += pieces_[id - kFirstPiece];
    } else {
      throw Error(ErrorCode::kShapeMismatch,
                  "token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  return out;
}

std::string Tokenizer::Render(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (IsSpecial(id)) {
      out += kSpecialNames[id];
    } else {
      out += Decode(std::span<const int>(&id, 1));
    }
  }
  return out;
}

nlohmann::json Tokenizer::ToJson() const {
  return nlohmann::json{{"kind", "piece-byte"}, {"pieces", pieces_}};
}

Tokenizer Tokenizer::FromJson(const nlohmann::json& j) {
  Tokenizer tokenizer;
  for (const auto& piece : j.at("pieces")) {
    tokenizer.piece_ids_.emplace(piece.get<std::string>(),
                                 static_cast<int>(tokenizer.vocab_size()));
    tokenizer.pieces_.push_back(piece.get<std::string>());
  }
  return tokenizer;
}

}  // namespace wsbert
