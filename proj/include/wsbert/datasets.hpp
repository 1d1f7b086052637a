#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace wsbert {

enum class StanceLabel { kFavor = 0, kAgainst = 1, kNeutral = 2 };
enum class Split { kTrain, kValidation, kTest };
enum class DatasetName { kPStance, kCovid19Stance, kVast };
enum class Protocol { kTargetSpecific, kCrossTarget, kZeroFewShot };

std::string_view LabelName(StanceLabel label);
std::string_view SplitName(Split split);
std::string_view DatasetNameString(DatasetName name);
std::string_view ProtocolName(Protocol protocol);

Split ParseSplit(std::string_view text);
DatasetName ParseDatasetName(std::string_view text);
Protocol ParseProtocol(std::string_view text);

inline int LabelIndex(StanceLabel label) { return static_cast<int>(label); }
StanceLabel LabelFromIndex(int index);

struct StanceExample {
  std::string example_id;
  std::string document;
  std::string target;
  StanceLabel label = StanceLabel::kFavor;
  Split split = Split::kTrain;
  // Published seen/unseen marker for zero/few-shot corpora, when the source
  // file carries one (true = target seen in training).
  std::optional<bool> seen;

  bool operator==(const StanceExample&) const = default;
};

struct DatasetSpec {
  DatasetName name = DatasetName::kVast;
  int label_arity = 3;
  std::vector<std::string> targets;
  std::map<Split, std::filesystem::path> source_files;
  // Extra lower-cased label spellings, e.g. {"0": against} for numeric codes.
  std::map<std::string, StanceLabel> label_aliases;

  // Arity and target list for a known corpus.
  static DatasetSpec Defaults(DatasetName name);

  // Throws Error(kConfigInvalid).
  void Validate() const;
};

struct LoadIssue {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

struct LoadReport {
  std::vector<StanceExample> examples;
  std::vector<LoadIssue> issues;
};

// Reads every split file, collecting malformed rows instead of stopping at
// the first one. Throws Error(kMissingFile) when a file is absent and
// Error(kSchemaMismatch) when a header lacks a required column.
LoadReport LoadDatasetWithReport(const DatasetSpec& spec);

// As above, but any collected issue becomes Error(kSchemaMismatch) whose
// message lists every issue.
std::vector<StanceExample> LoadDataset(const DatasetSpec& spec);

// Writes examples in the canonical ingest format (header + one row each).
void WriteSplitFile(const std::filesystem::path& path,
                    const std::vector<StanceExample>& examples);

struct SplitPlan {
  Protocol protocol = Protocol::kZeroFewShot;
  std::optional<std::string> source_target;
  std::optional<std::string> destination_target;
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  nlohmann::json ToManifest() const;
  static SplitPlan FromManifest(const nlohmann::json& manifest);
};

// Throws Error(kUnknownTarget) for absent or identical targets and
// Error(kEmptySplit) when any produced split is empty.
SplitPlan BuildSplit(const std::vector<StanceExample>& examples,
                     Protocol protocol,
                     const std::optional<std::string>& source_target,
                     const std::optional<std::string>& destination_target);

struct SplitData {
  std::vector<StanceExample> train;
  std::vector<StanceExample> validation;
  std::vector<StanceExample> test;
};

SplitData Materialize(const SplitPlan& plan,
                      const std::vector<StanceExample>& examples);

struct ZeroFewPartition {
  std::vector<StanceExample> zero_shot;
  std::vector<StanceExample> few_shot;
};

// An example is few-shot when its target occurs at least once among the
// training targets.
ZeroFewPartition PartitionZeroFew(const std::vector<StanceExample>& test,
                                  const std::set<std::string>& train_targets);

// Uses the published `seen` markers; examples without one fall back to
// training-target membership.
ZeroFewPartition PartitionByPublishedMarker(
    const std::vector<StanceExample>& test,
    const std::set<std::string>& train_targets);

std::map<std::string, std::size_t> TargetCounts(
    const std::vector<StanceExample>& examples);

std::set<std::string> TargetSet(const std::vector<StanceExample>& examples);

}  // namespace wsbert
