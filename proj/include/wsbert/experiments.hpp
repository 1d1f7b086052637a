#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wsbert/datasets.hpp"
#include "wsbert/error.hpp"
#include "wsbert/evaluation.hpp"
#include "wsbert/knowledge.hpp"
#include "wsbert/model.hpp"
#include "wsbert/tables.hpp"
#include "wsbert/training.hpp"

namespace wsbert {

// A module error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "[" + stage + "] " + cause.what()),
        stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct KnowledgeSettings {
  std::filesystem::path cache;
  std::optional<std::filesystem::path> manual_map;
  bool offline = false;
  std::chrono::milliseconds min_request_interval{200};
  std::size_t parallelism = 1;
};

struct TokenizerSettings {
  std::size_t vocab_size = 8000;
  std::size_t min_count = 1;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string method;  // table row label; defaults from the variant
  std::uint64_t seed = 42;
  DatasetSpec dataset;
  Protocol protocol = Protocol::kTargetSpecific;
  std::optional<std::string> source_target;
  std::optional<std::string> destination_target;
  ModelConfig model;
  TrainConfig train;
  bool grid_search = false;
  std::vector<GridPoint> grid;  // empty with grid_search = the default grid
  TokenizerSettings tokenizer;
  KnowledgeSettings knowledge;
  std::filesystem::path output_dir;
  bool allow_variant_override = false;

  // Relative paths resolve against `base_dir`.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);
  static ExperimentConfig Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  // Throws Error(kConfigInvalid), including on a dataset/variant pairing
  // other than dual for tweet corpora and single for VAST unless
  // allow_variant_override is set.
  void Validate() const;
};

// Deterministic child seed for a named randomized step.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view stream);

struct LabeledReport {
  std::string column;
  EvalReport report;
};

struct ExperimentResult {
  std::vector<LabeledReport> reports;
  TrainHistory history;
  std::optional<GridResult> grid;
  std::filesystem::path report_path;
  std::filesystem::path checkpoint_path;
};

struct PreparedData;

// Pipeline stages shared by the run/train/evaluate commands.
class Experiment {
 public:
  // `page_source` overrides the live encyclopedia client (tests, offline
  // stubs); it must outlive the experiment.
  explicit Experiment(ExperimentConfig config, PageSource* page_source = nullptr);
  ~Experiment();

  // Loads data, resolves knowledge and builds the split.
  void Prepare();

  // Trains (with grid search when configured), writes the checkpoint,
  // per-epoch metrics and the config snapshot.
  ExperimentResult Train();

  // Evaluates a checkpoint on the protocol's test set and writes the report.
  ExperimentResult Evaluate(const std::filesystem::path& checkpoint);

  // Prepare + Train + Evaluate.
  ExperimentResult Run();

  // Extra key/values recorded in the provenance block (CLI args etc).
  void AddProvenance(const std::string& key, nlohmann::json value);

  // Readable encoded streams of the first n training examples.
  std::string DumpStreams(std::size_t n);

  const ExperimentConfig& config() const { return config_; }
  const SplitPlan& split_plan() const;
  const SplitData& split_data() const;
  const std::vector<KnowledgeRecord>& knowledge() const;

 private:
  StanceModel BuildModel(std::uint64_t seed, const GridPoint& point) const;
  EncodedSplit EncodeSplit(const StanceModel& model,
                           const std::vector<StanceExample>& rows) const;
  nlohmann::json Provenance() const;
  void WriteReport(ExperimentResult& result) const;

  ExperimentConfig config_;
  PageSource* page_source_;
  std::unique_ptr<PreparedData> data_;
  nlohmann::json extra_provenance_ = nlohmann::json::object();
};

// Column labels for a protocol's report cells.
std::string CrossTargetLabel(std::string_view source, std::string_view destination);

// Reads report files written by Experiment and groups them into table rows
// keyed by method.
std::vector<TableRow> LoadReportRows(
    const std::vector<std::filesystem::path>& report_files);

}  // namespace wsbert
