#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"
#include "wsbert/knowledge.hpp"
#include "wsbert/wikipedia_source.hpp"

using namespace wsbert;
using namespace wsbert::testing;

namespace {

ResolverOptions Fast() {
  ResolverOptions o;
  o.min_request_interval = std::chrono::milliseconds(0);
  return o;
}

}  // namespace

TEST(KnowledgeResolver, ManualMapWins) {
  StubPageSource source;
  source.pages["Anthony Fauci"] = {"Anthony Fauci", "Anthony Stephen Fauci is an American physician.", false, {}};
  KnowledgeCache cache;
  TargetPageMap map;
  map.Add("Fauci", "Anthony Fauci");
  KnowledgeResolver resolver(cache, map, &source, Fast());
  KnowledgeRecord r = resolver.Resolve("Fauci");
  EXPECT_EQ(r.status, KnowledgeStatus::kManual);
  EXPECT_EQ(r.page_title, std::optional<std::string>("Anthony Fauci"));
  EXPECT_EQ(r.summary, "Anthony Stephen Fauci is an American physician.");
  EXPECT_EQ(source.search_calls, 0);
}

TEST(KnowledgeResolver, NoPageFallsBackToTarget) {
  StubPageSource source;
  KnowledgeCache cache;
  KnowledgeResolver resolver(cache, {}, &source, Fast());
  KnowledgeRecord r = resolver.Resolve("salt preference");
  EXPECT_EQ(r.status, KnowledgeStatus::kFallback);
  EXPECT_EQ(r.summary, "salt preference");
  EXPECT_FALSE(r.page_title.has_value());
}

TEST(KnowledgeResolver, FirstCandidateIsUsed) {
  StubPageSource source;
  source.AddPage("gun control", "Gun control", "Gun control is a set of laws.");
  source.AddPage("gun control", "Gun politics", "Gun politics is...");
  KnowledgeCache cache;
  KnowledgeResolver resolver(cache, {}, &source, Fast());
  KnowledgeRecord r = resolver.Resolve("gun control");
  EXPECT_EQ(r.status, KnowledgeStatus::kResolved);
  EXPECT_EQ(r.page_title, std::optional<std::string>("Gun control"));
}

TEST(KnowledgeResolver, DisambiguationFollowsFirstOption) {
  StubPageSource source;
  source.search["Mercury"] = {"Mercury"};
  source.pages["Mercury"] = {"Mercury", "Mercury may refer to:", true, {"Mercury (planet)", "Mercury (element)"}};
  source.pages["Mercury (planet)"] = {"Mercury (planet)", "Mercury is the smallest planet.", false, {}};
  KnowledgeCache cache;
  KnowledgeResolver resolver(cache, {}, &source, Fast());
  KnowledgeRecord r = resolver.Resolve("Mercury");
  EXPECT_EQ(r.page_title, std::optional<std::string>("Mercury (planet)"));
  EXPECT_EQ(r.summary, "Mercury is the smallest planet.");
}

TEST(KnowledgeResolver, BlankTargetIsRejected) {
  KnowledgeCache cache;
  KnowledgeResolver resolver(cache, {}, nullptr, Fast());
  try {
    resolver.Resolve("   ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyTarget);
  }
}

TEST(KnowledgeResolver, OfflineMissIsUpstreamUnavailable) {
  StubPageSource source;
  KnowledgeCache cache;
  ResolverOptions o = Fast();
  o.offline = true;
  KnowledgeResolver resolver(cache, {}, &source, o);
  try {
    resolver.Resolve("Trump");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUpstreamUnavailable);
  }
  EXPECT_EQ(source.search_calls, 0);
}

TEST(KnowledgeResolver, ResolveIsIdempotentWithCache) {
  StubPageSource source;
  source.AddPage("Trump", "Donald Trump", "Donald John Trump is an American politician.");
  KnowledgeCache cache;
  KnowledgeResolver resolver(cache, {}, &source, Fast());
  KnowledgeRecord a = resolver.Resolve("Trump");
  KnowledgeRecord b = resolver.Resolve("Trump");
  EXPECT_TRUE(a.SameContent(b));
  EXPECT_EQ(source.search_calls, 1);
  EXPECT_EQ(cache.Get("Trump"), a);
}

TEST(KnowledgeResolver, BulkCountsUpstreamRequests) {
  StubPageSource source;
  source.AddPage("c", "C", "c page");
  KnowledgeCache cache;
  cache.Put({"a", "A", "a page", KnowledgeStatus::kResolved, NowUtc()});
  cache.Put({"b", std::nullopt, "b", KnowledgeStatus::kFallback, NowUtc()});
  KnowledgeResolver resolver(cache, {}, &source, Fast());
  BulkResult result = resolver.ResolveAll({"a", "b", "c"});
  EXPECT_EQ(result.resolved_count(), 3u);
  EXPECT_EQ(resolver.upstream_lookups(), 1u);
  EXPECT_EQ(source.search_calls, 1);
  EXPECT_EQ(result.records[2]->summary, "c page");
}

TEST(KnowledgeResolver, BulkDeduplicates) {
  StubPageSource source;
  source.AddPage("x", "X", "x page");
  KnowledgeCache cache;
  KnowledgeResolver resolver(cache, {}, &source, Fast());
  BulkResult result = resolver.ResolveAll({"x", "y", "x"});
  ASSERT_EQ(result.records.size(), 3u);
  EXPECT_EQ(*result.records[0], *result.records[2]);
  EXPECT_EQ(source.search_calls, 2);
}

TEST(KnowledgeResolver, BulkReportsPartialFailures) {
  StubPageSource source;
  for (std::string t : {"t1", "t2", "t3", "t4", "t5"}) source.AddPage(t, t + " page", "about " + t);
  source.failing.insert("t3");
  KnowledgeCache cache;
  ResolverOptions o = Fast();
  o.parallelism = 3;
  KnowledgeResolver resolver(cache, {}, &source, o);
  BulkResult result = resolver.ResolveAll({"t1", "t2", "t3", "t4", "t5"});
  EXPECT_EQ(result.resolved_count(), 4u);
  ASSERT_EQ(result.failures.size(), 1u);
  EXPECT_EQ(result.failures[0].target, "t3");
  EXPECT_EQ(result.failures[0].index, 2u);
  EXPECT_FALSE(result.records[2].has_value());
  EXPECT_EQ(result.records[4]->summary, "about t5");
}

TEST(KnowledgeResolver, ParallelBulkMatchesSerial) {
  StubPageSource source;
  std::vector<std::string> targets;
  for (int i = 0; i < 40; ++i) {
    targets.push_back("target " + std::to_string(i));
    if (i % 3) source.AddPage(targets.back(), "Page " + std::to_string(i), "summary " + std::to_string(i));
  }
  KnowledgeCache serial_cache, parallel_cache;
  ResolverOptions o = Fast();
  KnowledgeResolver serial(serial_cache, {}, &source, o);
  o.parallelism = 4;
  KnowledgeResolver parallel(parallel_cache, {}, &source, o);
  auto a = serial.ResolveAll(targets);
  auto b = parallel.ResolveAll(targets);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    EXPECT_TRUE(a.records[i]->SameContent(*b.records[i])) << i;
  }
}

TEST(KnowledgeCache, RoundTripsEveryField) {
  KnowledgeRecord r{"Biden", "Joe Biden", "Joseph Robinette \"Joe\" Biden\tJr.\n",
                    KnowledgeStatus::kManual, ParseUtc("2021-05-01T12:30:00Z")};
  EXPECT_EQ(ParseCacheLine(ToCacheLine(r)), r);
  KnowledgeRecord f = MakeFallbackRecord("vaccine mandates");
  KnowledgeRecord back = ParseCacheLine(ToCacheLine(f));
  EXPECT_EQ(back, f);
  EXPECT_EQ(back.summary, "vaccine mandates");
}

TEST(KnowledgeCache, SkipsCorruptLines) {
  auto path = TempPath("cache_corrupt.jsonl");
  {
    std::ofstream out(path);
    out << "{not json\n";
    out << ToCacheLine({"Trump", "Donald Trump", "old", KnowledgeStatus::kResolved, ParseUtc("2020-01-01T00:00:00Z")}) << "\n";
    out << "{\"target\": \"x\"}\n";
    out << ToCacheLine({"Trump", "Donald Trump", "new", KnowledgeStatus::kResolved, ParseUtc("2021-01-01T00:00:00Z")}) << "\n";
  }
  KnowledgeCache cache(path);
  EXPECT_EQ(cache.corrupt_lines(), 2u);
  ASSERT_TRUE(cache.Get("Trump"));
  EXPECT_EQ(cache.Get("Trump")->summary, "new");
  EXPECT_FALSE(cache.Get("Biden"));
}

TEST(KnowledgeCache, PersistsAcrossInstances) {
  auto path = TempPath("cache_persist.jsonl");
  {
    KnowledgeCache cache(path);
    cache.Put(MakeFallbackRecord("abortion"));
  }
  KnowledgeCache reopened(path);
  EXPECT_EQ(reopened.size(), 1u);
  EXPECT_EQ(reopened.Get("abortion")->status, KnowledgeStatus::kFallback);
}

TEST(KnowledgeRecord, InvariantsAreEnforced) {
  EXPECT_THROW(ValidateRecord({"t", "Page", "summary", KnowledgeStatus::kFallback, NowUtc()}), Error);
  EXPECT_THROW(ValidateRecord({"t", std::nullopt, "t2", KnowledgeStatus::kFallback, NowUtc()}), Error);
  EXPECT_THROW(ValidateRecord({"t", std::nullopt, "s", KnowledgeStatus::kResolved, NowUtc()}), Error);
  EXPECT_THROW(ValidateRecord({"t", "P", "", KnowledgeStatus::kManual, NowUtc()}), Error);
  EXPECT_THROW(ValidateRecord({"  ", "P", "s", KnowledgeStatus::kManual, NowUtc()}), Error);
  EXPECT_NO_THROW(ValidateRecord(MakeFallbackRecord("t")));
}

TEST(TargetPageMap, ParsesTsvWithComments) {
  TargetPageMap map = TargetPageMap::Parse(
      "# curated titles\nTrump\tDonald Trump\n\nFauci\tAnthony Fauci\n");
  EXPECT_EQ(map.Lookup("Trump"), std::optional<std::string>("Donald Trump"));
  EXPECT_EQ(map.Lookup(" Fauci "), std::optional<std::string>("Anthony Fauci"));
  EXPECT_FALSE(map.Lookup("Biden"));
  EXPECT_THROW(TargetPageMap::Parse("a\tA\na\tB\n"), Error);
  EXPECT_THROW(TargetPageMap::Parse("a\t\n"), Error);
}

TEST(WikipediaPageSource, ParsesSearchResponse) {
  auto titles = WikipediaPageSource::ParseSearchResponse(
      R"js({"query":{"search":[{"title":"Donald Trump"},{"title":"Trump (card games)"}]}})js");
  ASSERT_EQ(titles.size(), 2u);
  EXPECT_EQ(titles[0], "Donald Trump");
  EXPECT_TRUE(WikipediaPageSource::ParseSearchResponse(R"js({"query":{"search":[]}})js").empty());
}

TEST(WikipediaPageSource, ParsesExtractAndDisambiguation) {
  auto page = WikipediaPageSource::ParseExtractResponse(
      R"js({"query":{"pages":{"1":{"title":"Joe Biden","extract":"Joseph Biden is..."}}}})js");
  EXPECT_EQ(page.title, "Joe Biden");
  EXPECT_EQ(page.extract, "Joseph Biden is...");
  EXPECT_FALSE(page.is_disambiguation);
  auto dab = WikipediaPageSource::ParseExtractResponse(
      R"js({"query":{"pages":{"2":{"title":"Mercury","extract":"Mercury may refer to:","pageprops":{"disambiguation":""}}}}})js");
  EXPECT_TRUE(dab.is_disambiguation);
  auto links = WikipediaPageSource::ParseLinksResponse(
      R"js({"query":{"pages":{"2":{"links":[{"ns":0,"title":"Mercury (planet)"},{"ns":0,"title":"Mercury (element)"}]}}}})js");
  ASSERT_EQ(links.size(), 2u);
  EXPECT_EQ(links[0], "Mercury (planet)");
}

TEST(WikipediaPageSource, UrlEncodesReservedBytes) {
  EXPECT_EQ(UrlEncode("a b&c=d/é"), "a%20b%26c%3Dd%2F%C3%A9");
}
