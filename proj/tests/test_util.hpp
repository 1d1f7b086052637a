#pragma once

#include <string>
#include <vector>

#include "wsbert/encoding.hpp"
#include "wsbert/model.hpp"
#include "wsbert/tokenizer.hpp"

namespace wsbert::testing {

inline Tokenizer TinyTokenizer() {
  return Tokenizer::Train({"I love it", "I hate it", "Trump Biden", "a politician"},
                          300);
}

inline std::string MiniSpec(int layers = 2, int hidden = 16, int heads = 2,
                            double dropout = 0.0) {
  return "mini:layers=" + std::to_string(layers) + ",hidden=" + std::to_string(hidden) +
         ",heads=" + std::to_string(heads) + ",intermediate=" +
         std::to_string(2 * hidden) + ",positions=64,dropout=" + std::to_string(dropout);
}

inline StanceModel TinyModel(Variant variant, int num_labels = 2,
                             std::optional<std::size_t> top = std::nullopt,
                             double dropout = 0.0, std::uint64_t seed = 3) {
  Tokenizer tok = TinyTokenizer();
  Rng rng(seed);
  ModelConfig mc;
  mc.variant = variant;
  mc.pair_encoder_id = MiniSpec(2, 16, 2, dropout);
  mc.num_labels = num_labels;
  mc.head_dropout = dropout;
  std::optional<TransformerEncoder> knowledge;
  TransformerEncoder pair = CreateEncoder(mc.pair_encoder_id, "pair_encoder", tok, rng);
  if (variant == Variant::kDual) {
    mc.knowledge_encoder_id = mc.pair_encoder_id;
    mc.wiki_finetune_top_layers = top;
    knowledge = CreateEncoder(*mc.knowledge_encoder_id, "knowledge_encoder", tok, rng);
  }
  return StanceModel(mc, std::move(pair), std::move(knowledge), seed + 1);
}

inline EncodedInput EncodeFor(StanceModel& model, const std::string& doc,
                              const std::string& target, const std::string& wiki) {
  InputEncoder enc(model.config().variant, &model.pair_tokenizer(),
                   model.knowledge_tokenizer(), model.limits());
  return enc.Encode(doc, target, wiki);
}

}  // namespace wsbert::testing

#include <atomic>
#include <map>
#include <mutex>
#include <set>

#include "wsbert/error.hpp"
#include "wsbert/knowledge.hpp"

namespace wsbert::testing {

// In-memory page source. Targets in `failing` raise UpstreamUnavailable;
// queries absent from `search` have no candidate pages.
class StubPageSource : public PageSource {
 public:
  std::map<std::string, std::vector<std::string>> search;
  std::map<std::string, PageSummary> pages;
  std::set<std::string> failing;
  std::atomic<int> search_calls{0};
  std::atomic<int> fetch_calls{0};

  void AddPage(const std::string& query, const std::string& title,
               const std::string& extract) {
    search[query].push_back(title);
    pages[title] = PageSummary{title, extract, false, {}};
  }

  std::vector<std::string> Search(const std::string& query) override {
    ++search_calls;
    if (failing.contains(query)) {
      throw Error(ErrorCode::kUpstreamUnavailable, "stub outage for " + query);
    }
    auto it = search.find(query);
    return it == search.end() ? std::vector<std::string>{} : it->second;
  }

  PageSummary FetchSummary(const std::string& title) override {
    ++fetch_calls;
    auto it = pages.find(title);
    if (it == pages.end()) {
      throw Error(ErrorCode::kUpstreamUnavailable, "stub has no page " + title);
    }
    return it->second;
  }
};

inline std::filesystem::path TempPath(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wsbert_tests";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace wsbert::testing
