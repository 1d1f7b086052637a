#include "wsbert/experiments.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <set>

#include "wsbert/encoding.hpp"
#include "wsbert/tokenizer.hpp"
#include "wsbert/wikipedia_source.hpp"

namespace wsbert {

namespace {

constexpr const char* kPairEncoderName = "pair_encoder";
constexpr const char* kKnowledgeEncoderName = "knowledge_encoder";

std::filesystem::path ResolvePath(const std::filesystem::path& base,
                                  const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::optional<std::string> OptionalString(const nlohmann::json& j,
                                          const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

void WriteJson(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <typename Fn>
auto RunStage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const nlohmann::json::exception& e) {
    throw StageError(stage, Error(ErrorCode::kConfigInvalid, e.what()));
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, Error(ErrorCode::kIo, e.what()));
  }
}

std::string DefaultMethod(Variant variant) {
  return variant == Variant::kSingle ? "WS-BERT-Single" : "WS-BERT-Dual";
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view stream) {
  // FNV-1a over the stream name, folded into the root with splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL + h;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string CrossTargetLabel(std::string_view source,
                             std::string_view destination) {
  return std::string(source) + "→" + std::string(destination);
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j,
                                            const std::filesystem::path& base) {
  try {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", c.seed);

    const auto& d = j.at("dataset");
    c.dataset = DatasetSpec::Defaults(ParseDatasetName(d.at("name").get<std::string>()));
    c.dataset.label_arity = d.value("label_arity", c.dataset.label_arity);
    if (d.contains("targets")) {
      c.dataset.targets = d["targets"].get<std::vector<std::string>>();
    }
    for (const auto& [split, file] : d.at("files").items()) {
      c.dataset.source_files[ParseSplit(split)] =
          ResolvePath(base, file.get<std::string>());
    }
    if (d.contains("label_aliases")) {
      for (const auto& [alias, label] : d["label_aliases"].items()) {
        std::string name = label.get<std::string>();
        StanceLabel value = name == "favor"     ? StanceLabel::kFavor
                            : name == "against" ? StanceLabel::kAgainst
                            : name == "neutral" ? StanceLabel::kNeutral
                                                : throw Error(ErrorCode::kConfigInvalid,
                                                              "bad alias target " + name);
        std::string key = alias;
        for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        c.dataset.label_aliases[key] = value;
      }
    }

    const auto& p = j.at("protocol");
    c.protocol = ParseProtocol(p.at("kind").get<std::string>());
    c.source_target = OptionalString(p, "source_target");
    c.destination_target = OptionalString(p, "destination_target");

    c.model = ModelConfig::FromJson(j.at("model"));
    if (!j.at("model").contains("num_labels")) {
      c.model.num_labels = c.dataset.label_arity;
    }
    c.method = j.value("method", DefaultMethod(c.model.variant));

    const auto& t = j.value("train", nlohmann::json::object());
    c.train = TrainConfig::FromJson(t);
    if (!t.contains("seed")) c.train.seed = c.seed;
    c.grid_search = t.value("grid_search", false);
    if (t.contains("grid")) {
      for (const auto& g : t["grid"]) {
        GridPoint point;
        point.learning_rate = g.at("learning_rate").get<double>();
        if (g.contains("top_layers") && g["top_layers"].is_number_integer()) {
          point.top_layers = g["top_layers"].get<std::size_t>();
        }
        c.grid.push_back(point);
      }
    }

    if (j.contains("tokenizer")) {
      c.tokenizer.vocab_size = j["tokenizer"].value("vocab_size", c.tokenizer.vocab_size);
      c.tokenizer.min_count = j["tokenizer"].value("min_count", c.tokenizer.min_count);
    }

    const auto& k = j.value("knowledge", nlohmann::json::object());
    c.knowledge.cache = ResolvePath(base, k.value("cache", "knowledge_cache.jsonl"));
    if (auto map = OptionalString(k, "manual_map")) {
      c.knowledge.manual_map = ResolvePath(base, *map);
    }
    c.knowledge.offline = k.value("offline", false) || OfflineFromEnv();
    c.knowledge.min_request_interval =
        std::chrono::milliseconds(k.value("rate_limit_ms", 200));
    c.knowledge.parallelism = k.value("parallelism", std::size_t{1});

    c.output_dir = ResolvePath(base, j.value("output_dir", "runs/" + c.name));
    c.allow_variant_override = j.value("allow_variant_override", false);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j;
  j["name"] = name;
  j["method"] = method;
  j["seed"] = seed;
  nlohmann::json files = nlohmann::json::object();
  for (const auto& [split, path] : dataset.source_files) {
    files[std::string(SplitName(split))] = path.string();
  }
  nlohmann::json aliases = nlohmann::json::object();
  for (const auto& [alias, label] : dataset.label_aliases) {
    aliases[alias] = LabelName(label);
  }
  j["dataset"] = {{"name", DatasetNameString(dataset.name)},
                  {"label_arity", dataset.label_arity},
                  {"targets", dataset.targets},
                  {"files", files},
                  {"label_aliases", aliases}};
  j["protocol"] = {
      {"kind", ProtocolName(protocol)},
      {"source_target", source_target ? nlohmann::json(*source_target) : nlohmann::json(nullptr)},
      {"destination_target",
       destination_target ? nlohmann::json(*destination_target) : nlohmann::json(nullptr)}};
  j["model"] = model.ToJson();
  j["train"] = train.ToJson();
  j["train"]["grid_search"] = grid_search;
  j["train"]["grid"] = nlohmann::json::array();
  for (const auto& g : grid) j["train"]["grid"].push_back(g.ToJson());
  j["tokenizer"] = {{"vocab_size", tokenizer.vocab_size},
                    {"min_count", tokenizer.min_count}};
  j["knowledge"] = {
      {"cache", knowledge.cache.string()},
      {"manual_map", knowledge.manual_map ? nlohmann::json(knowledge.manual_map->string())
                                          : nlohmann::json(nullptr)},
      {"offline", knowledge.offline},
      {"rate_limit_ms", knowledge.min_request_interval.count()},
      {"parallelism", knowledge.parallelism}};
  j["output_dir"] = output_dir.string();
  j["allow_variant_override"] = allow_variant_override;
  return j;
}

void ExperimentConfig::Validate() const {
  dataset.Validate();
  model.Validate();
  train.Validate();
  if (model.num_labels != dataset.label_arity) {
    throw Error(ErrorCode::kConfigInvalid,
                "model has " + std::to_string(model.num_labels) +
                    " labels but the dataset has arity " +
                    std::to_string(dataset.label_arity));
  }
  Variant expected =
      dataset.name == DatasetName::kVast ? Variant::kSingle : Variant::kDual;
  if (model.variant != expected && !allow_variant_override) {
    throw Error(ErrorCode::kConfigInvalid,
                std::string(DatasetNameString(dataset.name)) + " pairs with the " +
                    std::string(VariantName(expected)) +
                    " variant; set allow_variant_override to use " +
                    std::string(VariantName(model.variant)));
  }
  if (grid_search && model.variant == Variant::kSingle) {
    for (const auto& g : grid) {
      if (g.top_layers) {
        throw Error(ErrorCode::kConfigInvalid,
                    "grid top_layers needs the dual variant");
      }
    }
  }
  if (output_dir.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "output_dir is required");
  }
}

struct PreparedData {
  std::vector<StanceExample> examples;
  std::vector<KnowledgeRecord> knowledge;
  std::map<std::string, std::string> knowledge_text;
  SplitPlan plan;
  SplitData split;
  Tokenizer pair_tokenizer;
  Tokenizer knowledge_tokenizer;
};

Experiment::Experiment(ExperimentConfig config, PageSource* page_source)
    : config_(std::move(config)), page_source_(page_source) {
  RunStage("config", [&] { config_.Validate(); });
}

Experiment::~Experiment() = default;

const SplitPlan& Experiment::split_plan() const { return data_->plan; }
const SplitData& Experiment::split_data() const { return data_->split; }
const std::vector<KnowledgeRecord>& Experiment::knowledge() const {
  return data_->knowledge;
}

void Experiment::AddProvenance(const std::string& key, nlohmann::json value) {
  extra_provenance_[key] = std::move(value);
}

void Experiment::Prepare() {
  auto data = std::make_unique<PreparedData>();

  data->examples = RunStage("dataset", [&] { return LoadDataset(config_.dataset); });

  RunStage("knowledge", [&] {
    std::vector<std::string> targets;
    for (const auto& t : TargetSet(data->examples)) targets.push_back(t);
    KnowledgeCache cache(config_.knowledge.cache);
    TargetPageMap manual = config_.knowledge.manual_map
                               ? TargetPageMap::Load(*config_.knowledge.manual_map)
                               : TargetPageMap{};
    std::unique_ptr<WikipediaPageSource> live;
    PageSource* source = page_source_;
    if (source == nullptr && !config_.knowledge.offline) {
      live = std::make_unique<WikipediaPageSource>();
      source = live.get();
    }
    ResolverOptions options;
    options.offline = config_.knowledge.offline;
    options.min_request_interval = config_.knowledge.min_request_interval;
    options.parallelism = config_.knowledge.parallelism;
    KnowledgeResolver resolver(cache, std::move(manual), source, options);
    BulkResult bulk = resolver.ResolveAll(targets);
    if (!bulk.failures.empty()) {
      std::string message = std::to_string(bulk.failures.size()) +
                            " target(s) without knowledge:";
      for (const auto& f : bulk.failures) message += "\n  " + f.target + ": " + f.message;
      throw Error(ErrorCode::kUpstreamUnavailable, message);
    }
    for (auto& r : bulk.records) data->knowledge.push_back(std::move(*r));
    data->knowledge_text = KnowledgeTexts(data->knowledge);
  });

  RunStage("split", [&] {
    data->plan = BuildSplit(data->examples, config_.protocol,
                            config_.source_target, config_.destination_target);
    data->split = Materialize(data->plan, data->examples);
  });

  RunStage("encoding", [&] {
    // Vocabularies for randomly initialised encoders come from the training
    // text only (plus the knowledge texts, which are per-target inputs).
    std::vector<std::string> pair_corpus;
    std::vector<std::string> knowledge_corpus;
    for (const auto& [_, text] : data->knowledge_text) knowledge_corpus.push_back(text);
    for (const auto& e : data->split.train) {
      const std::string& w = data->knowledge_text.at(e.target);
      if (config_.model.variant == Variant::kSingle) {
        SingleText text = BuildSingleText(e.document, e.target, w);
        pair_corpus.push_back(text.segment_a);
      } else {
        pair_corpus.push_back(e.document);
        pair_corpus.push_back(e.target);
      }
    }
    if (config_.model.variant == Variant::kSingle) {
      pair_corpus.insert(pair_corpus.end(), knowledge_corpus.begin(),
                         knowledge_corpus.end());
    }
    data->pair_tokenizer = Tokenizer::Train(pair_corpus, config_.tokenizer.vocab_size,
                                            config_.tokenizer.min_count);
    data->knowledge_tokenizer = Tokenizer::Train(
        knowledge_corpus, config_.tokenizer.vocab_size, config_.tokenizer.min_count);
  });

  data_ = std::move(data);

  RunStage("report", [&] {
    std::filesystem::create_directories(config_.output_dir);
    WriteJson(config_.output_dir / "config.json", config_.ToJson());
    WriteJson(config_.output_dir / "split_manifest.json", data_->plan.ToManifest());
  });
}

StanceModel Experiment::BuildModel(std::uint64_t seed, const GridPoint& point) const {
  Rng init_rng(DeriveSeed(seed, "init"));
  ModelConfig mc = config_.model;
  TransformerEncoder pair =
      CreateEncoder(mc.pair_encoder_id, kPairEncoderName, data_->pair_tokenizer, init_rng);
  std::optional<TransformerEncoder> knowledge;
  if (mc.variant == Variant::kDual) {
    knowledge = CreateEncoder(*mc.knowledge_encoder_id, kKnowledgeEncoderName,
                              data_->knowledge_tokenizer, init_rng);
    if (point.top_layers) mc.wiki_finetune_top_layers = point.top_layers;
  }
  return StanceModel(mc, std::move(pair), std::move(knowledge),
                     DeriveSeed(seed, "dropout"));
}

EncodedSplit Experiment::EncodeSplit(const StanceModel& model,
                                     const std::vector<StanceExample>& rows) const {
  InputEncoder encoder(model.config().variant, &model.pair_tokenizer(),
                       model.knowledge_tokenizer(), model.limits());
  EncodedSplit split;
  for (const auto& e : rows) {
    auto it = data_->knowledge_text.find(e.target);
    if (it == data_->knowledge_text.end()) {
      throw Error(ErrorCode::kUpstreamUnavailable,
                  "no knowledge attached for target '" + e.target + "'");
    }
    split.inputs.push_back(encoder.Encode(e.document, e.target, it->second));
    split.labels.push_back(LabelIndex(e.label));
  }
  return split;
}

std::string Experiment::DumpStreams(std::size_t n) {
  if (!data_) Prepare();
  StanceModel model = BuildModel(config_.seed, GridPoint{});
  InputEncoder encoder(model.config().variant, &model.pair_tokenizer(),
                       model.knowledge_tokenizer(), model.limits());
  std::string out;
  for (std::size_t i = 0; i < std::min(n, data_->split.train.size()); ++i) {
    const auto& e = data_->split.train[i];
    out += "example " + e.example_id + "\n";
    out += encoder.Dump(
        encoder.Encode(e.document, e.target, data_->knowledge_text.at(e.target)));
  }
  return out;
}

ExperimentResult Experiment::Train() {
  if (!data_) Prepare();
  ExperimentResult result;

  std::vector<GridPoint> grid;
  if (config_.grid_search) {
    grid = config_.grid.empty() ? DefaultGrid(config_.model.variant) : config_.grid;
  } else {
    GridPoint point;
    point.learning_rate = config_.train.learning_rate;
    point.top_layers = config_.train.wiki_finetune_top_layers
                           ? config_.train.wiki_finetune_top_layers
                           : config_.model.wiki_finetune_top_layers;
    if (config_.model.variant == Variant::kSingle) point.top_layers.reset();
    grid.push_back(point);
  }

  const auto runs_dir = config_.output_dir / "runs";
  std::filesystem::create_directories(runs_dir);
  std::ofstream metrics(config_.output_dir / "metrics.jsonl");
  std::optional<EncodedSplit> train_split, validation_split;
  std::vector<TrainHistory> histories;

  auto run_point = [&](const GridPoint& point) -> double {
    std::size_t index = histories.size();
    histories.emplace_back();
    StanceModel model = RunStage("model", [&] { return BuildModel(config_.seed, point); });
    if (!train_split) {
      RunStage("encoding", [&] {
        train_split = EncodeSplit(model, data_->split.train);
        validation_split = EncodeSplit(model, data_->split.validation);
      });
    }
    TrainConfig tc = config_.train;
    tc.learning_rate = point.learning_rate;
    tc.wiki_finetune_top_layers = point.top_layers;
    tc.seed = DeriveSeed(config_.seed, "shuffle");
    spdlog::info("training grid point {} (lr {}, top layers {})", index,
                 point.learning_rate,
                 point.top_layers ? std::to_string(*point.top_layers) : "all");
    TrainResult trained = RunStage("training", [&] {
      return wsbert::Train(model, *train_split, *validation_split, tc,
                           [&](const EpochRecord& r) {
                             metrics << nlohmann::json{
                                            {"grid_index", index},
                                            {"learning_rate", point.learning_rate},
                                            {"top_layers", point.top_layers
                                                               ? nlohmann::json(*point.top_layers)
                                                               : nlohmann::json("all")},
                                            {"epoch", r.epoch},
                                            {"train_loss", r.train_loss},
                                            {"validation_metric", r.validation_metric}}
                                            .dump()
                                     << '\n';
                             metrics.flush();
                           });
    });
    histories[index] = trained.history;
    RunStage("report", [&] {
      model.Save(runs_dir / ("run_" + std::to_string(index) + ".ckpt"));
    });
    return trained.best_validation_metric;
  };

  GridResult grid_result = GridSearch(grid, [&](const GridPoint& point) {
    try {
      return run_point(point);
    } catch (const StageError& e) {
      if (grid.size() == 1) throw;
      throw Error(e.code(), e.what());
    }
  });

  result.grid = grid_result;
  result.history = histories.at(grid_result.best_index);
  result.checkpoint_path = config_.output_dir / "best.ckpt";
  RunStage("report", [&] {
    std::filesystem::copy_file(
        runs_dir / ("run_" + std::to_string(grid_result.best_index) + ".ckpt"),
        result.checkpoint_path, std::filesystem::copy_options::overwrite_existing);
    nlohmann::json summary;
    summary["best_index"] = grid_result.best_index;
    summary["runs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < grid_result.runs.size(); ++i) {
      const auto& run = grid_result.runs[i];
      nlohmann::json r = run.point.ToJson();
      r["validation_metric"] = run.validation_metric
                                   ? nlohmann::json(*run.validation_metric)
                                   : nlohmann::json(nullptr);
      r["error"] = run.error;
      if (i < histories.size()) r["history"] = histories[i].ToJson();
      summary["runs"].push_back(r);
    }
    summary["provenance"] = Provenance();
    WriteJson(config_.output_dir / "train_summary.json", summary);
  });
  return result;
}

ExperimentResult Experiment::Evaluate(const std::filesystem::path& checkpoint) {
  if (!data_) Prepare();
  ExperimentResult result;
  result.checkpoint_path = checkpoint;
  StanceModel model = RunStage("evaluation", [&] { return StanceModel::Load(checkpoint); });
  RunStage("evaluation", [&] {
    if (model.config().num_labels != config_.dataset.label_arity) {
      throw Error(ErrorCode::kConfigInvalid,
                  "checkpoint label count does not match the dataset arity");
    }
    EncodedSplit test = EncodeSplit(model, data_->split.test);
    std::vector<int> predictions = Predict(model, test.inputs);
    const int arity = config_.dataset.label_arity;
    switch (config_.protocol) {
      case Protocol::kZeroFewShot: {
        ZeroFewPartition partition =
            PartitionByPublishedMarker(data_->split.test, TargetSet(data_->split.train));
        std::set<std::string> zero_ids;
        for (const auto& e : partition.zero_shot) zero_ids.insert(e.example_id);
        std::vector<Subset> membership;
        for (const auto& e : data_->split.test) {
          membership.push_back(zero_ids.contains(e.example_id) ? Subset::kZeroShot
                                                               : Subset::kFewShot);
        }
        VastReports reports = EvaluateVast(predictions, test.labels, membership);
        result.reports.push_back({"Zero-shot", reports.zero_shot});
        result.reports.push_back({"Few-shot", reports.few_shot});
        result.reports.push_back({"Overall", reports.overall});
        break;
      }
      case Protocol::kTargetSpecific:
        result.reports.push_back(
            {*config_.source_target, MacroF1(predictions, test.labels, arity)});
        break;
      case Protocol::kCrossTarget:
        result.reports.push_back(
            {CrossTargetLabel(*config_.source_target, *config_.destination_target),
             MacroF1(predictions, test.labels, arity)});
        break;
    }
  });
  RunStage("report", [&] { WriteReport(result); });
  return result;
}

ExperimentResult Experiment::Run() {
  Prepare();
  ExperimentResult trained = Train();
  ExperimentResult evaluated = Evaluate(trained.checkpoint_path);
  evaluated.history = trained.history;
  evaluated.grid = trained.grid;
  return evaluated;
}

nlohmann::json Experiment::Provenance() const {
  nlohmann::json p;
  p["config"] = config_.ToJson();
  p["seed"] = config_.seed;
  p["derived_seeds"] = {{"init", DeriveSeed(config_.seed, "init")},
                        {"dropout", DeriveSeed(config_.seed, "dropout")},
                        {"shuffle", DeriveSeed(config_.seed, "shuffle")}};
  p["checkpoints"] = {{"pair_encoder", config_.model.pair_encoder_id},
                      {"knowledge_encoder", config_.model.knowledge_encoder_id
                                                ? nlohmann::json(*config_.model.knowledge_encoder_id)
                                                : nlohmann::json(nullptr)}};
  p["representation"] = "pooler: tanh(affine(final-layer [CLS] state))";
  p["optimizer"] = {{"name", "adam"},
                    {"weight_decay_mode", "decoupled"},
                    {"beta1", config_.train.adam_beta1},
                    {"beta2", config_.train.adam_beta2},
                    {"epsilon", config_.train.adam_epsilon},
                    {"clip_norm", config_.train.clip_norm},
                    {"lr_schedule", "constant"}};
  if (data_) {
    nlohmann::json knowledge = nlohmann::json::array();
    for (const auto& r : data_->knowledge) {
      knowledge.push_back({{"target", r.target},
                           {"status", KnowledgeStatusName(r.status)},
                           {"page_title", r.page_title ? nlohmann::json(*r.page_title)
                                                       : nlohmann::json(nullptr)},
                           {"fetched_at", FormatUtc(r.fetched_at)}});
    }
    p["knowledge"] = knowledge;
    p["split_sizes"] = {{"train", data_->plan.train.size()},
                        {"validation", data_->plan.validation.size()},
                        {"test", data_->plan.test.size()}};
  }
  p["created_at"] = FormatUtc(NowUtc());
  p["extra"] = extra_provenance_;
  return p;
}

void Experiment::WriteReport(ExperimentResult& result) const {
  nlohmann::json j;
  j["experiment"] = config_.name;
  j["method"] = config_.method;
  j["dataset"] = DatasetNameString(config_.dataset.name);
  j["protocol"] = ProtocolName(config_.protocol);
  j["checkpoint"] = result.checkpoint_path.string();
  j["evaluated_count"] = data_->split.test.size();
  j["reports"] = nlohmann::json::array();
  std::vector<TableCell> cells;
  for (const auto& r : result.reports) {
    nlohmann::json entry = r.report.ToJson();
    entry["column"] = r.column;
    j["reports"].push_back(entry);
    if (!r.report.absent) cells.push_back(CellFromReport(r.column, r.report));
  }
  j["provenance"] = Provenance();
  result.report_path = config_.output_dir / "report.json";
  WriteJson(result.report_path, j);

  if (!cells.empty()) {
    ResultTable table = EmitTable({{config_.method, cells}},
                                  config_.protocol != Protocol::kZeroFewShot);
    std::ofstream txt(config_.output_dir / "report.txt");
    txt << table.Format();
  }
}

std::vector<TableRow> LoadReportRows(
    const std::vector<std::filesystem::path>& report_files) {
  std::vector<TableRow> rows;
  for (const auto& path : report_files) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kMissingFile, "cannot open report " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInconsistentReports, path.string() + ": " + e.what());
    }
    std::string method = j.value("method", "model");
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const TableRow& r) { return r.method == method; });
    if (it == rows.end()) {
      rows.push_back({method, {}});
      it = rows.end() - 1;
    }
    for (const auto& entry : j.at("reports")) {
      EvalReport report = EvalReport::FromJson(entry);
      if (report.absent) continue;
      it->cells.push_back(CellFromReport(entry.at("column").get<std::string>(), report));
    }
  }
  return rows;
}

}  // namespace wsbert
