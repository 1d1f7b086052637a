#include "wsbert/evaluation.hpp"

#include "wsbert/error.hpp"

namespace wsbert {

std::string_view SubsetName(Subset subset) {
  switch (subset) {
    case Subset::kAll: return "all";
    case Subset::kZeroShot: return "zero_shot";
    case Subset::kFewShot: return "few_shot";
  }
  return "all";
}

namespace {

Subset ParseSubset(std::string_view name) {
  if (name == "zero_shot") return Subset::kZeroShot;
  if (name == "few_shot") return Subset::kFewShot;
  return Subset::kAll;
}

EvalReport AbsentReport(int arity, Subset subset) {
  EvalReport report;
  report.arity = arity;
  report.per_class.assign(static_cast<std::size_t>(arity), ClassScore{});
  report.confusion.assign(static_cast<std::size_t>(arity),
                          std::vector<std::size_t>(static_cast<std::size_t>(arity), 0));
  report.subset = subset;
  report.absent = true;
  return report;
}

}  // namespace

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json j;
  j["arity"] = arity;
  j["subset"] = SubsetName(subset);
  j["absent"] = absent;
  j["count"] = count;
  j["f_avg"] = f_avg;
  nlohmann::json classes = nlohmann::json::object();
  for (int c = 0; c < arity; ++c) {
    const auto& s = per_class[static_cast<std::size_t>(c)];
    classes[std::string(LabelName(LabelFromIndex(c)))] = {
        {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  }
  j["per_class"] = classes;
  j["confusion"] = confusion;
  return j;
}

EvalReport EvalReport::FromJson(const nlohmann::json& j) {
  EvalReport report;
  report.arity = j.at("arity").get<int>();
  report.subset = ParseSubset(j.value("subset", "all"));
  report.absent = j.value("absent", false);
  report.count = j.at("count").get<std::size_t>();
  report.f_avg = j.at("f_avg").get<double>();
  for (int c = 0; c < report.arity; ++c) {
    const auto& s = j.at("per_class").at(std::string(LabelName(LabelFromIndex(c))));
    report.per_class.push_back({s.at("precision").get<double>(),
                                s.at("recall").get<double>(),
                                s.at("f1").get<double>()});
  }
  report.confusion =
      j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  return report;
}

EvalReport MacroF1(std::span<const int> predictions, std::span<const int> gold,
                   int arity) {
  if (arity != 2 && arity != 3) {
    throw Error(ErrorCode::kLabelOutOfRange, "arity must be 2 or 3");
  }
  if (predictions.size() != gold.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "nothing to evaluate");
  }
  const auto k = static_cast<std::size_t>(arity);
  EvalReport report;
  report.arity = arity;
  report.count = gold.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    int g = gold[i];
    int p = predictions[i];
    if (g < 0 || g >= arity || p < 0 || p >= arity) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label outside arity " + std::to_string(arity) +
                      " at position " + std::to_string(i));
    }
    ++report.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
  }

  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = report.confusion[c][c];
    std::size_t predicted = 0, actual = 0;
    for (std::size_t o = 0; o < k; ++o) {
      predicted += report.confusion[o][c];
      actual += report.confusion[c][o];
    }
    ClassScore s;
    s.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / predicted;
    s.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / actual;
    s.f1 = s.precision + s.recall == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    sum += s.f1;
    report.per_class.push_back(s);
  }
  report.f_avg = sum / static_cast<double>(k);
  return report;
}

EvalReport MacroF1(std::span<const StanceLabel> predictions,
                   std::span<const StanceLabel> gold, int arity) {
  std::vector<int> p, g;
  for (auto l : predictions) p.push_back(LabelIndex(l));
  for (auto l : gold) g.push_back(LabelIndex(l));
  return MacroF1(p, g, arity);
}

VastReports EvaluateVast(std::span<const int> predictions,
                         std::span<const int> gold,
                         std::span<const Subset> membership) {
  if (membership.size() != gold.size()) {
    throw Error(ErrorCode::kPartitionMismatch,
                "partition covers " + std::to_string(membership.size()) +
                    " of " + std::to_string(gold.size()) + " examples");
  }
  if (predictions.size() != gold.size()) {
    throw Error(ErrorCode::kLengthMismatch, "predictions and gold differ in length");
  }
  std::vector<int> zp, zg, fp, fg;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    switch (membership[i]) {
      case Subset::kZeroShot:
        zp.push_back(predictions[i]);
        zg.push_back(gold[i]);
        break;
      case Subset::kFewShot:
        fp.push_back(predictions[i]);
        fg.push_back(gold[i]);
        break;
      case Subset::kAll:
        throw Error(ErrorCode::kPartitionMismatch,
                    "example " + std::to_string(i) + " is in neither subset");
    }
  }
  VastReports reports;
  reports.zero_shot =
      zg.empty() ? AbsentReport(3, Subset::kZeroShot) : MacroF1(zp, zg, 3);
  reports.zero_shot.subset = Subset::kZeroShot;
  reports.few_shot =
      fg.empty() ? AbsentReport(3, Subset::kFewShot) : MacroF1(fp, fg, 3);
  reports.few_shot.subset = Subset::kFewShot;
  reports.overall = MacroF1(predictions, gold, 3);
  return reports;
}

}  // namespace wsbert
