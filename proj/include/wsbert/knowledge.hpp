#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wsbert/rate_limiter.hpp"

namespace wsbert {

enum class KnowledgeStatus { kResolved, kFallback, kManual };

std::string_view KnowledgeStatusName(KnowledgeStatus status);
KnowledgeStatus ParseKnowledgeStatus(std::string_view name);

using UtcTime = std::chrono::sys_seconds;

UtcTime NowUtc();
std::string FormatUtc(UtcTime t);
UtcTime ParseUtc(std::string_view text);

// Background text about one stance target, as attached to every example
// carrying that target.
struct KnowledgeRecord {
  std::string target;
  std::optional<std::string> page_title;
  std::string summary;
  KnowledgeStatus status = KnowledgeStatus::kFallback;
  UtcTime fetched_at{};

  bool operator==(const KnowledgeRecord&) const = default;

  // Field equality ignoring fetched_at.
  bool SameContent(const KnowledgeRecord& other) const;
};

// Throws Error(kSchemaMismatch) when the record breaks a status invariant and
// Error(kEmptyTarget) for a blank target.
void ValidateRecord(const KnowledgeRecord& record);

KnowledgeRecord MakeFallbackRecord(std::string_view target);

// One cache line, without trailing newline.
std::string ToCacheLine(const KnowledgeRecord& record);
// Throws Error(kCorruptCacheLine).
KnowledgeRecord ParseCacheLine(std::string_view line);

std::string Trim(std::string_view text);

// Curated target -> page title table. Keys are trimmed target strings.
class TargetPageMap {
 public:
  TargetPageMap() = default;

  // Two tab-separated columns per line; '#' starts a comment line.
  static TargetPageMap Load(const std::filesystem::path& path);
  static TargetPageMap Parse(std::string_view text);

  void Add(std::string_view target, std::string_view page_title);
  std::optional<std::string> Lookup(std::string_view target) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

struct PageSummary {
  std::string title;
  std::string extract;
  bool is_disambiguation = false;
  // Ranked resolutions offered by a disambiguation page.
  std::vector<std::string> options;
};

// Upstream encyclopedia access. Implementations throw
// Error(kUpstreamUnavailable) on transport failure; "no such page" is an
// empty Search result, never an exception.
class PageSource {
 public:
  virtual ~PageSource() = default;

  // Candidate page titles in the source's recommendation order.
  virtual std::vector<std::string> Search(const std::string& query) = 0;
  virtual PageSummary FetchSummary(const std::string& title) = 0;
};

// Append-only newline-delimited record store; the last record for a target
// wins. An empty path keeps the cache in memory only.
class KnowledgeCache {
 public:
  explicit KnowledgeCache(std::filesystem::path path = {});

  KnowledgeCache(const KnowledgeCache&) = delete;
  KnowledgeCache& operator=(const KnowledgeCache&) = delete;

  std::optional<KnowledgeRecord> Get(std::string_view target) const;
  void Put(const KnowledgeRecord& record);

  // Re-reads the backing file.
  void Reload();

  std::size_t size() const;
  std::size_t corrupt_lines() const { return corrupt_lines_; }
  const std::filesystem::path& path() const { return path_; }
  std::vector<KnowledgeRecord> Records() const;

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex map_mutex_;
  std::mutex writer_mutex_;
  std::unordered_map<std::string, KnowledgeRecord> records_;
  std::size_t corrupt_lines_ = 0;
};

// True when WSBERT_OFFLINE is set to 1/true/yes/on.
bool OfflineFromEnv();

struct ResolverOptions {
  std::chrono::milliseconds min_request_interval{200};
  bool offline = false;
  std::size_t parallelism = 1;
};

struct BulkFailure {
  std::size_t index = 0;
  std::string target;
  std::string message;
};

struct BulkResult {
  // One slot per input target, in input order; empty where resolution
  // failed.
  std::vector<std::optional<KnowledgeRecord>> records;
  std::vector<BulkFailure> failures;

  std::size_t resolved_count() const;
};

class KnowledgeResolver {
 public:
  // `source` may be null, in which case every cache miss is
  // kUpstreamUnavailable.
  KnowledgeResolver(KnowledgeCache& cache, TargetPageMap manual_map,
                    PageSource* source, ResolverOptions options = {});

  // Cache-first. Manual map entries win over search; a search with no
  // candidates yields a fallback record whose summary is the target itself.
  KnowledgeRecord Resolve(std::string_view target);

  BulkResult ResolveAll(const std::vector<std::string>& targets);

  // Number of targets that needed the upstream source.
  std::size_t upstream_lookups() const { return upstream_lookups_.load(); }

 private:
  KnowledgeRecord ResolveUpstream(const std::string& target);
  PageSummary FetchFollowingDisambiguation(const std::string& title);

  KnowledgeCache& cache_;
  TargetPageMap manual_map_;
  PageSource* source_;
  ResolverOptions options_;
  RateLimiter limiter_;
  std::atomic<std::size_t> upstream_lookups_{0};
};

// Target -> knowledge text, validating each record on the way.
std::map<std::string, std::string> KnowledgeTexts(
    const std::vector<KnowledgeRecord>& records);

}  // namespace wsbert
