#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "wsbert/wikipedia_source.hpp"

#include <cctype>
#include <cstdio>

#include "httplib.h"
#include "json.hpp"
#include "wsbert/error.hpp"

namespace wsbert {

using nlohmann::json;

std::string UrlEncode(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

WikipediaPageSource::WikipediaPageSource() : WikipediaPageSource(Options{}) {}

WikipediaPageSource::WikipediaPageSource(Options options)
    : options_(std::move(options)) {}

std::string WikipediaPageSource::Get(const std::string& query_string) {
  httplib::Client client(options_.host);
  client.set_follow_location(true);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  httplib::Headers headers = {{"User-Agent", options_.user_agent}};
  auto response = client.Get(options_.api_path + "?" + query_string, headers);
  if (!response) {
    throw Error(ErrorCode::kUpstreamUnavailable,
                "request to " + options_.host + " failed: " +
                    httplib::to_string(response.error()));
  }
  if (response->status != 200) {
    throw Error(ErrorCode::kUpstreamUnavailable,
                "HTTP " + std::to_string(response->status) + " from " +
                    options_.host);
  }
  return response->body;
}

std::vector<std::string> WikipediaPageSource::Search(const std::string& query) {
  std::string body = Get("action=query&format=json&list=search&srlimit=" +
                         std::to_string(options_.search_limit) +
                         "&srsearch=" + UrlEncode(query));
  return ParseSearchResponse(body);
}

PageSummary WikipediaPageSource::FetchSummary(const std::string& title) {
  std::string body = Get(
      "action=query&format=json&redirects=1&prop=extracts%7Cpageprops"
      "&exintro=1&explaintext=1&ppprop=disambiguation&titles=" +
      UrlEncode(title));
  PageSummary page = ParseExtractResponse(body);
  if (page.is_disambiguation) {
    page.options = ParseLinksResponse(
        Get("action=query&format=json&redirects=1&prop=links&plnamespace=0"
            "&pllimit=50&titles=" +
            UrlEncode(page.title.empty() ? title : page.title)));
  }
  return page;
}

std::vector<std::string> WikipediaPageSource::ParseSearchResponse(
    std::string_view body) {
  std::vector<std::string> titles;
  try {
    json j = json::parse(body);
    if (j.contains("error")) {
      throw Error(ErrorCode::kUpstreamUnavailable, j["error"].dump());
    }
    for (const auto& hit : j.at("query").at("search")) {
      titles.push_back(hit.at("title").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kUpstreamUnavailable,
                std::string("malformed search response: ") + e.what());
  }
  return titles;
}

PageSummary WikipediaPageSource::ParseExtractResponse(std::string_view body) {
  PageSummary page;
  try {
    json j = json::parse(body);
    const auto& pages = j.at("query").at("pages");
    if (pages.empty()) return page;
    const auto& first = pages.begin().value();
    if (first.contains("missing")) return page;
    page.title = first.value("title", "");
    page.extract = first.value("extract", "");
    page.is_disambiguation = first.contains("pageprops") &&
                             first["pageprops"].contains("disambiguation");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kUpstreamUnavailable,
                std::string("malformed extract response: ") + e.what());
  }
  return page;
}

std::vector<std::string> WikipediaPageSource::ParseLinksResponse(
    std::string_view body) {
  std::vector<std::string> links;
  try {
    json j = json::parse(body);
    for (const auto& [_, page] : j.at("query").at("pages").items()) {
      if (!page.contains("links")) continue;
      for (const auto& link : page["links"]) {
        links.push_back(link.at("title").get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kUpstreamUnavailable,
                std::string("malformed links response: ") + e.what());
  }
  return links;
}

}  // namespace wsbert
