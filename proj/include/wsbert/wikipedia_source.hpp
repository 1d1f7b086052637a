#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "wsbert/knowledge.hpp"

namespace wsbert {

// PageSource backed by the MediaWiki action API. Search returns the API's
// ranked full-text hits; FetchSummary returns the plain-text lead section.
class WikipediaPageSource : public PageSource {
 public:
  struct Options {
    std::string host = "https://en.wikipedia.org";
    std::string api_path = "/w/api.php";
    std::string user_agent = "wsbert-knowledge/0.1";
    std::chrono::seconds timeout{20};
    int search_limit = 10;
  };

  WikipediaPageSource();
  explicit WikipediaPageSource(Options options);

  std::vector<std::string> Search(const std::string& query) override;
  PageSummary FetchSummary(const std::string& title) override;

  // Response decoding, exposed for testing without a network.
  static std::vector<std::string> ParseSearchResponse(std::string_view body);
  static PageSummary ParseExtractResponse(std::string_view body);
  static std::vector<std::string> ParseLinksResponse(std::string_view body);

 private:
  std::string Get(const std::string& query_string);

  Options options_;
};

std::string UrlEncode(std::string_view text);

}  // namespace wsbert
