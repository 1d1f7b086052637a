#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wsbert/datasets.hpp"
#include "wsbert/encoding.hpp"
#include "wsbert/error.hpp"
#include "wsbert/evaluation.hpp"
#include "wsbert/experiments.hpp"
#include "wsbert/knowledge.hpp"
#include "wsbert/tables.hpp"
#include "wsbert/tokenizer.hpp"
#include "wsbert/training.hpp"

namespace py = pybind11;
using namespace wsbert;

namespace {

// Reports cross the boundary as plain Python objects via the json module.
py::object ToPy(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<int> LabelIndices(const std::vector<std::string>& labels) {
  std::vector<int> out;
  for (const auto& name : labels) {
    if (name == "favor") out.push_back(0);
    else if (name == "against") out.push_back(1);
    else if (name == "neutral") out.push_back(2);
    else throw Error(ErrorCode::kLabelOutOfRange, "unknown label '" + name + "'");
  }
  return out;
}

py::list ReportsToPy(const ExperimentResult& result) {
  py::list out;
  for (const auto& r : result.reports) {
    py::dict d = ToPy(r.report.ToJson());
    d["column"] = r.column;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wikipedia-enhanced stance detection toolkit";

  py::register_exception<Error>(m, "WsbertError", PyExc_RuntimeError);

  // Metrics.
  m.def("macro_f1",
        [](const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
           int arity) {
          auto p = LabelIndices(predictions), g = LabelIndices(gold);
          return ToPy(MacroF1(p, g, arity).ToJson());
        },
        py::arg("predictions"), py::arg("gold"), py::arg("arity"));
  m.def("evaluate_vast",
        [](const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
           const std::vector<bool>& zero_shot) {
          auto p = LabelIndices(predictions), g = LabelIndices(gold);
          std::vector<Subset> membership;
          for (bool z : zero_shot) membership.push_back(z ? Subset::kZeroShot : Subset::kFewShot);
          VastReports r = EvaluateVast(p, g, membership);
          py::dict out;
          out["zero_shot"] = ToPy(r.zero_shot.ToJson());
          out["few_shot"] = ToPy(r.few_shot.ToJson());
          out["overall"] = ToPy(r.overall.ToJson());
          return out;
        },
        py::arg("predictions"), py::arg("gold"), py::arg("zero_shot"));

  // Encoding.
  m.def("build_single_text", [](const std::string& d, const std::string& t, const std::string& w) {
    SingleText s = BuildSingleText(d, t, w);
    return std::make_pair(s.segment_a, s.segment_b);
  });
  m.def("build_dual_texts", [](const std::string& d, const std::string& t, const std::string& w) {
    DualTexts s = BuildDualTexts(d, t, w);
    return std::make_pair(s.pair, s.knowledge);
  });
  m.def("truncate_knowledge",
        [](const std::vector<int>& tokens, std::size_t max_tokens) {
          return TruncateKnowledge(tokens, max_tokens);
        },
        py::arg("tokens"), py::arg("max_tokens") = kKnowledgeTokenLimit);
  m.def("fit_single_budget",
        [](const std::vector<int>& a, const std::vector<int>& b, std::size_t model_max) {
          return FitSingleBudget(a, b, model_max);
        });

  py::class_<Tokenizer>(m, "Tokenizer")
      .def(py::init<>())
      .def_static("train", &Tokenizer::Train, py::arg("corpus"), py::arg("vocab_size"),
                  py::arg("min_count") = 1)
      .def("encode", &Tokenizer::Encode)
      .def("decode", [](const Tokenizer& t, const std::vector<int>& ids) { return t.Decode(ids); })
      .def("render", [](const Tokenizer& t, const std::vector<int>& ids) { return t.Render(ids); })
      .def_property_readonly("vocab_size", &Tokenizer::vocab_size);

  // Knowledge.
  m.def("make_fallback_record", [](const std::string& target) {
    return ToPy(nlohmann::json::parse(ToCacheLine(MakeFallbackRecord(target))));
  });
  m.def("cache_lookup",
        [](const std::filesystem::path& cache_path, const std::string& target) -> py::object {
          KnowledgeCache cache(cache_path);
          auto r = cache.Get(target);
          if (!r) return py::none();
          return ToPy(nlohmann::json::parse(ToCacheLine(*r)));
        },
        py::arg("cache_path"), py::arg("target"));

  // Splits.
  m.def("partition_zero_few",
        [](const std::vector<std::string>& test_targets, const std::set<std::string>& train_targets) {
          std::vector<StanceExample> test;
          for (std::size_t i = 0; i < test_targets.size(); ++i) {
            test.push_back({std::to_string(i), "d", test_targets[i], StanceLabel::kFavor, Split::kTest, {}});
          }
          ZeroFewPartition p = PartitionZeroFew(test, train_targets);
          std::vector<std::size_t> zero, few;
          for (const auto& e : p.zero_shot) zero.push_back(std::stoul(e.example_id));
          for (const auto& e : p.few_shot) few.push_back(std::stoul(e.example_id));
          return std::make_pair(zero, few);
        });

  // Training utilities.
  m.def("simulate_early_stopping",
        [](const std::vector<double>& metrics, std::size_t patience, std::size_t max_epochs) {
          StoppingOutcome o = SimulateEarlyStopping(metrics, patience, max_epochs);
          return std::make_pair(o.best_epoch, o.stopped_epoch);
        },
        py::arg("metrics"), py::arg("patience") = 10, py::arg("max_epochs") = 100);
  m.def("select_grid_point",
        [](const std::vector<std::tuple<double, std::optional<std::size_t>, std::optional<double>>>& runs) {
          std::vector<GridRun> grid;
          for (const auto& [lr, top, metric] : runs) grid.push_back({{lr, top}, metric, ""});
          return SelectBest(grid);
        });

  // Tables.
  m.def("round_one_decimal", &RoundOneDecimal);
  m.def("emit_table",
        [](const std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>>& rows,
           int arity, bool with_average, const std::string& layout) {
          std::vector<TableRow> table_rows;
          for (const auto& [method, cells] : rows) {
            TableRow row{method, {}};
            for (const auto& [column, score] : cells) row.cells.push_back({column, score, arity});
            table_rows.push_back(row);
          }
          ResultTable t = EmitTable(table_rows, with_average);
          return std::make_pair(
              t.Format(layout == "columns" ? TableLayout::kMethodsAsColumns : TableLayout::kMethodsAsRows),
              ToPy(t.ToJson()));
        },
        py::arg("rows"), py::arg("arity") = 3, py::arg("with_average") = true,
        py::arg("layout") = "rows");

  // Experiments.
  m.def("load_config",
        [](const std::filesystem::path& path) { return ToPy(ExperimentConfig::Load(path).ToJson()); });
  m.def("run_experiment",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> out,
           bool offline) {
          ExperimentConfig config = ExperimentConfig::Load(config_path);
          if (out) config.output_dir = *out;
          if (offline) config.knowledge.offline = true;
          ExperimentResult result;
          {
            py::gil_scoped_release release;
            Experiment experiment(config);
            result = experiment.Run();
          }
          py::dict d;
          d["reports"] = ReportsToPy(result);
          d["report_path"] = result.report_path;
          d["checkpoint_path"] = result.checkpoint_path;
          d["history"] = ToPy(result.history.ToJson());
          return d;
        },
        py::arg("config_path"), py::arg("out") = py::none(), py::arg("offline") = false);
  m.def("load_report_rows", [](const std::vector<std::filesystem::path>& files) {
    py::list out;
    for (const auto& row : LoadReportRows(files)) {
      py::list cells;
      for (const auto& c : row.cells) cells.append(py::make_tuple(c.column, c.score));
      out.append(py::make_tuple(row.method, cells));
    }
    return out;
  });
}
