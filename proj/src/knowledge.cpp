#include "wsbert/knowledge.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wsbert/error.hpp"

namespace wsbert {

using nlohmann::json;

std::string_view KnowledgeStatusName(KnowledgeStatus status) {
  switch (status) {
    case KnowledgeStatus::kResolved: return "resolved";
    case KnowledgeStatus::kFallback: return "fallback";
    case KnowledgeStatus::kManual: return "manual";
  }
  return "fallback";
}

KnowledgeStatus ParseKnowledgeStatus(std::string_view name) {
  if (name == "resolved") return KnowledgeStatus::kResolved;
  if (name == "fallback") return KnowledgeStatus::kFallback;
  if (name == "manual") return KnowledgeStatus::kManual;
  throw Error(ErrorCode::kSchemaMismatch,
              "unknown knowledge status '" + std::string(name) + "'");
}

UtcTime NowUtc() {
  return std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::now());
}

std::string FormatUtc(UtcTime t) {
  std::time_t raw = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&raw, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

UtcTime ParseUtc(std::string_view text) {
  std::tm tm{};
  std::istringstream in{std::string(text)};
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail() || in.get() != 'Z') {
    throw Error(ErrorCode::kSchemaMismatch,
                "bad UTC timestamp '" + std::string(text) + "'");
  }
  return UtcTime{std::chrono::seconds{timegm(&tm)}};
}

std::string Trim(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return std::string(text);
}

bool KnowledgeRecord::SameContent(const KnowledgeRecord& other) const {
  return target == other.target && page_title == other.page_title &&
         summary == other.summary && status == other.status;
}

void ValidateRecord(const KnowledgeRecord& record) {
  if (Trim(record.target).empty()) {
    throw Error(ErrorCode::kEmptyTarget, "knowledge record has blank target");
  }
  if (record.status == KnowledgeStatus::kFallback) {
    if (record.summary != record.target || record.page_title.has_value()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "fallback record for '" + record.target +
                      "' must carry the target as summary and no page");
    }
  } else if (record.summary.empty() || !record.page_title ||
             record.page_title->empty()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "record for '" + record.target +
                    "' needs a page title and a non-empty summary");
  }
}

KnowledgeRecord MakeFallbackRecord(std::string_view target) {
  KnowledgeRecord record;
  record.target = std::string(target);
  record.summary = std::string(target);
  record.status = KnowledgeStatus::kFallback;
  record.fetched_at = NowUtc();
  return record;
}

std::string ToCacheLine(const KnowledgeRecord& record) {
  json j;
  j["target"] = record.target;
  j["page_title"] =
      record.page_title ? json(*record.page_title) : json(nullptr);
  j["summary"] = record.summary;
  j["status"] = KnowledgeStatusName(record.status);
  j["fetched_at"] = FormatUtc(record.fetched_at);
  return j.dump();
}

KnowledgeRecord ParseCacheLine(std::string_view line) {
  try {
    json j = json::parse(line);
    KnowledgeRecord record;
    record.target = j.at("target").get<std::string>();
    const auto& title = j.at("page_title");
    if (!title.is_null()) record.page_title = title.get<std::string>();
    record.summary = j.at("summary").get<std::string>();
    record.status = ParseKnowledgeStatus(j.at("status").get<std::string>());
    record.fetched_at = ParseUtc(j.at("fetched_at").get<std::string>());
    ValidateRecord(record);
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptCacheLine, e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptCacheLine, e.what());
  }
}

TargetPageMap TargetPageMap::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kMissingFile,
                "cannot open page map " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

TargetPageMap TargetPageMap::Parse(std::string_view text) {
  TargetPageMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "page map line " + std::to_string(line_no) +
                      " needs two tab-separated columns");
    }
    map.Add(std::string_view(line).substr(0, tab),
            std::string_view(line).substr(tab + 1));
  }
  return map;
}

void TargetPageMap::Add(std::string_view target, std::string_view page_title) {
  std::string key = Trim(target);
  std::string value = Trim(page_title);
  if (key.empty()) throw Error(ErrorCode::kEmptyTarget, "page map key");
  if (value.empty()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "empty page title for '" + key + "'");
  }
  if (!entries_.emplace(key, value).second) {
    throw Error(ErrorCode::kSchemaMismatch,
                "duplicate page map key '" + key + "'");
  }
}

std::optional<std::string> TargetPageMap::Lookup(
    std::string_view target) const {
  auto it = entries_.find(Trim(target));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

KnowledgeCache::KnowledgeCache(std::filesystem::path path)
    : path_(std::move(path)) {
  Reload();
}

void KnowledgeCache::Reload() {
  std::unique_lock lock(map_mutex_);
  records_.clear();
  corrupt_lines_ = 0;
  if (path_.empty()) return;
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      KnowledgeRecord record = ParseCacheLine(line);
      records_.insert_or_assign(record.target, std::move(record));
    } catch (const Error& e) {
      ++corrupt_lines_;
      spdlog::warn("{}:{}: skipping corrupt cache line ({})", path_.string(),
                   line_no, e.what());
    }
  }
}

std::optional<KnowledgeRecord> KnowledgeCache::Get(
    std::string_view target) const {
  std::shared_lock lock(map_mutex_);
  auto it = records_.find(std::string(target));
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void KnowledgeCache::Put(const KnowledgeRecord& record) {
  ValidateRecord(record);
  std::lock_guard writer(writer_mutex_);
  if (!path_.empty()) {
    if (path_.has_parent_path()) {
      std::filesystem::create_directories(path_.parent_path());
    }
    std::ofstream out(path_, std::ios::app);
    if (!out) {
      throw Error(ErrorCode::kIo, "cannot append to " + path_.string());
    }
    out << ToCacheLine(record) << '\n';
    out.flush();
  }
  std::unique_lock lock(map_mutex_);
  records_.insert_or_assign(record.target, record);
}

std::size_t KnowledgeCache::size() const {
  std::shared_lock lock(map_mutex_);
  return records_.size();
}

std::vector<KnowledgeRecord> KnowledgeCache::Records() const {
  std::shared_lock lock(map_mutex_);
  std::vector<KnowledgeRecord> out;
  out.reserve(records_.size());
  for (const auto& [_, record] : records_) out.push_back(record);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.target < b.target; });
  return out;
}

bool OfflineFromEnv() {
  const char* value = std::getenv("WSBERT_OFFLINE");
  if (value == nullptr) return false;
  std::string v = Trim(value);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

std::size_t BulkResult::resolved_count() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(),
                    [](const auto& r) { return r.has_value(); }));
}

KnowledgeResolver::KnowledgeResolver(KnowledgeCache& cache,
                                     TargetPageMap manual_map,
                                     PageSource* source,
                                     ResolverOptions options)
    : cache_(cache),
      manual_map_(std::move(manual_map)),
      source_(source),
      options_(options),
      limiter_(options.min_request_interval) {}

KnowledgeRecord KnowledgeResolver::Resolve(std::string_view target) {
  if (Trim(target).empty()) {
    throw Error(ErrorCode::kEmptyTarget, "cannot resolve a blank target");
  }
  if (auto cached = cache_.Get(target)) return *cached;
  if (options_.offline) {
    throw Error(ErrorCode::kUpstreamUnavailable,
                "offline mode and no cached entry for '" +
                    std::string(target) + "'");
  }
  if (source_ == nullptr) {
    throw Error(ErrorCode::kUpstreamUnavailable,
                "no page source configured for '" + std::string(target) + "'");
  }
  KnowledgeRecord record = ResolveUpstream(std::string(target));
  cache_.Put(record);
  return record;
}

PageSummary KnowledgeResolver::FetchFollowingDisambiguation(
    const std::string& title) {
  limiter_.Acquire();
  PageSummary page = source_->FetchSummary(title);
  if (page.is_disambiguation && !page.options.empty()) {
    limiter_.Acquire();
    page = source_->FetchSummary(page.options.front());
  }
  return page;
}

KnowledgeRecord KnowledgeResolver::ResolveUpstream(const std::string& target) {
  ++upstream_lookups_;
  KnowledgeRecord record;
  record.target = target;

  if (auto mapped = manual_map_.Lookup(target)) {
    PageSummary page = FetchFollowingDisambiguation(*mapped);
    if (Trim(page.extract).empty()) {
      throw Error(ErrorCode::kUpstreamUnavailable,
                  "manually mapped page '" + *mapped + "' has no summary");
    }
    record.page_title = page.title.empty() ? *mapped : page.title;
    record.summary = page.extract;
    record.status = KnowledgeStatus::kManual;
    record.fetched_at = NowUtc();
    return record;
  }

  limiter_.Acquire();
  std::vector<std::string> candidates = source_->Search(target);
  if (!candidates.empty()) {
    PageSummary page = FetchFollowingDisambiguation(candidates.front());
    if (!Trim(page.extract).empty()) {
      record.page_title = page.title.empty() ? candidates.front() : page.title;
      record.summary = page.extract;
      record.status = KnowledgeStatus::kResolved;
      record.fetched_at = NowUtc();
      return record;
    }
    spdlog::warn("page '{}' for target '{}' has no summary; using fallback",
                 candidates.front(), target);
  }
  return MakeFallbackRecord(target);
}

BulkResult KnowledgeResolver::ResolveAll(
    const std::vector<std::string>& targets) {
  BulkResult result;
  result.records.resize(targets.size());

  // Unique targets in first-occurrence order; positions fan back out below.
  std::vector<std::string> unique;
  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto [it, inserted] = positions.try_emplace(targets[i]);
    if (inserted) unique.push_back(targets[i]);
    it->second.push_back(i);
  }

  std::vector<std::optional<KnowledgeRecord>> resolved(unique.size());
  std::vector<std::string> errors(unique.size());
  std::vector<std::size_t> misses;
  for (std::size_t u = 0; u < unique.size(); ++u) {
    if (Trim(unique[u]).empty()) {
      errors[u] = "EmptyTarget: blank target";
    } else if (auto cached = cache_.Get(unique[u])) {
      resolved[u] = std::move(cached);
    } else {
      misses.push_back(u);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < misses.size(); k = next++) {
      std::size_t u = misses[k];
      try {
        resolved[u] = Resolve(unique[u]);
      } catch (const Error& e) {
        errors[u] = e.what();
      }
    }
  };
  std::size_t threads =
      std::clamp<std::size_t>(options_.parallelism, 1, misses.size() + 1);
  if (threads <= 1 || misses.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t u = 0; u < unique.size(); ++u) {
    for (std::size_t pos : positions[unique[u]]) {
      if (resolved[u]) {
        result.records[pos] = resolved[u];
      } else {
        result.failures.push_back({pos, unique[u], errors[u]});
      }
    }
  }
  std::sort(result.failures.begin(), result.failures.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return result;
}

std::map<std::string, std::string> KnowledgeTexts(
    const std::vector<KnowledgeRecord>& records) {
  std::map<std::string, std::string> texts;
  for (const auto& record : records) {
    ValidateRecord(record);
    texts[record.target] = record.summary;
  }
  return texts;
}

}  // namespace wsbert
