// Command-line front end: knowledge fetch, train, evaluate, run, table.
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "wsbert/experiments.hpp"
#include "wsbert/knowledge.hpp"
#include "wsbert/tables.hpp"
#include "wsbert/wikipedia_source.hpp"

namespace {

using wsbert::Error;
using wsbert::StageError;

// "a,b,c" or "@file" with one target per line.
std::vector<std::string> ParseTargets(const std::string& spec) {
  std::vector<std::string> targets;
  auto add = [&](const std::string& raw) {
    std::string t = wsbert::Trim(raw);
    if (!t.empty() && t[0] != '#') targets.push_back(t);
  };
  if (!spec.empty() && spec[0] == '@') {
    std::ifstream in(spec.substr(1));
    if (!in) throw Error(wsbert::ErrorCode::kMissingFile, "cannot open " + spec.substr(1));
    for (std::string line; std::getline(in, line);) add(line);
  } else {
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) add(item);
  }
  return targets;
}

nlohmann::json ReportSummary(const wsbert::ExperimentResult& result) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& r : result.reports) {
    j[r.column] = r.report.absent ? nlohmann::json(nullptr)
                                  : nlohmann::json(100.0 * r.report.f_avg);
  }
  return j;
}

void PrintReports(const wsbert::ExperimentResult& result) {
  for (const auto& r : result.reports) {
    if (r.report.absent) {
      std::cout << r.column << ": no examples\n";
    } else {
      std::printf("%s: F_avg %.1f (n=%zu)\n", r.column.c_str(),
                  wsbert::RoundOneDecimal(100.0 * r.report.f_avg), r.report.count);
    }
  }
  if (!result.report_path.empty()) std::cout << "report: " << result.report_path.string() << "\n";
}

struct CommonOptions {
  std::string config;
  std::string out;
  bool offline = false;
  std::size_t dump_streams = 0;
};

wsbert::ExperimentConfig LoadConfig(const CommonOptions& o) {
  wsbert::ExperimentConfig config;
  try {
    config = wsbert::ExperimentConfig::Load(o.config);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("config", e);
  }
  if (!o.out.empty()) config.output_dir = o.out;
  if (o.offline) config.knowledge.offline = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wikipedia-enhanced stance detection toolkit"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error");

  // knowledge fetch
  auto* knowledge = app.add_subcommand("knowledge", "Background knowledge cache");
  knowledge->require_subcommand(1);
  auto* fetch = knowledge->add_subcommand("fetch", "Resolve targets into the cache");
  std::string targets_spec, cache_path, map_path;
  bool fetch_offline = false;
  int rate_ms = 200;
  std::size_t parallelism = 1;
  fetch->add_option("--targets", targets_spec, "Comma list or @file")->required();
  fetch->add_option("--cache", cache_path, "JSONL cache file")->required();
  fetch->add_option("--map", map_path, "Manual target-to-page TSV");
  fetch->add_flag("--offline", fetch_offline, "Serve from the cache only");
  fetch->add_option("--rate-ms", rate_ms, "Minimum spacing between requests");
  fetch->add_option("--parallelism", parallelism, "Concurrent upstream lookups");

  CommonOptions train_opts, eval_opts, run_opts;
  std::string checkpoint;
  auto add_common = [](CLI::App* cmd, CommonOptions& o, bool out_required) {
    cmd->add_option("--config", o.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", o.out, "Output directory (overrides config)");
    if (out_required) out->required();
    cmd->add_flag("--offline", o.offline, "Never contact the encyclopedia");
    cmd->add_option("--dump-streams", o.dump_streams,
                    "Print encoded streams of the first N training examples");
  };
  auto* train = app.add_subcommand("train", "Train (and grid search) a model");
  add_common(train, train_opts, true);
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  add_common(evaluate, eval_opts, false);
  evaluate->add_option("--checkpoint", checkpoint, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  auto* run = app.add_subcommand("run", "Train then evaluate");
  add_common(run, run_opts, false);

  auto* table = app.add_subcommand("table", "Tabulate report files");
  std::vector<std::string> report_files;
  std::string layout = "rows", table_json;
  bool no_average = false;
  table->add_option("reports", report_files, "report.json files")->required();
  table->add_option("--layout", layout, "rows|columns")
      ->check(CLI::IsMember({"rows", "columns"}));
  table->add_flag("--no-average", no_average, "Omit the average column");
  table->add_option("--json", table_json, "Also write the table as JSON");

  CLI11_PARSE(app, argc, argv);
  // Logs go to stderr so stdout stays machine-readable.
  spdlog::set_default_logger(spdlog::stderr_color_mt("wsbert"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  std::vector<std::string> args(argv, argv + argc);
  std::string stage = "cli";
  try {
    if (*fetch) {
      stage = "knowledge";
      wsbert::KnowledgeCache cache(cache_path);
      wsbert::TargetPageMap manual =
          map_path.empty() ? wsbert::TargetPageMap{} : wsbert::TargetPageMap::Load(map_path);
      wsbert::ResolverOptions options;
      options.offline = fetch_offline || wsbert::OfflineFromEnv();
      options.min_request_interval = std::chrono::milliseconds(rate_ms);
      options.parallelism = parallelism;
      std::unique_ptr<wsbert::WikipediaPageSource> source;
      if (!options.offline) source = std::make_unique<wsbert::WikipediaPageSource>();
      wsbert::KnowledgeResolver resolver(cache, std::move(manual), source.get(), options);
      auto targets = ParseTargets(targets_spec);
      auto bulk = resolver.ResolveAll(targets);
      for (const auto& r : bulk.records) {
        if (r) std::cout << wsbert::ToCacheLine(*r) << "\n";
      }
      for (const auto& f : bulk.failures) {
        std::cerr << "knowledge: " << f.target << ": " << f.message << "\n";
      }
      spdlog::info("{} of {} target(s) resolved, {} upstream lookup(s)",
                   bulk.resolved_count(), targets.size(), resolver.upstream_lookups());
      return bulk.failures.empty() ? 0 : 1;
    }

    if (*table) {
      stage = "table";
      std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
      auto result = wsbert::EmitTable(wsbert::LoadReportRows(paths), !no_average);
      std::cout << result.Format(layout == "rows" ? wsbert::TableLayout::kMethodsAsRows
                                                  : wsbert::TableLayout::kMethodsAsColumns);
      if (!table_json.empty()) {
        std::ofstream out(table_json);
        out << result.ToJson().dump(2) << "\n";
      }
      return 0;
    }

    CommonOptions& o = *train ? train_opts : (*evaluate ? eval_opts : run_opts);
    stage = "config";
    wsbert::Experiment experiment(LoadConfig(o));
    experiment.AddProvenance("cli_args", args);
    if (o.dump_streams > 0) std::cout << experiment.DumpStreams(o.dump_streams);

    if (*train) {
      auto result = experiment.Train();
      std::cout << "checkpoint: " << result.checkpoint_path.string() << "\n"
                << "best epoch: " << result.history.best_epoch << "\n";
    } else if (*evaluate) {
      PrintReports(experiment.Evaluate(checkpoint));
    } else {
      auto result = experiment.Run();
      PrintReports(result);
      spdlog::debug("scores {}", ReportSummary(result).dump());
    }
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error in stage '" << e.stage() << "': " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error in stage '" << stage << "': " << e.what() << "\n";
    return 2;
  }
}
