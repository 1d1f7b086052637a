#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wsbert/datasets.hpp"

namespace wsbert {

enum class Subset { kAll, kZeroShot, kFewShot };

std::string_view SubsetName(Subset subset);

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  int arity = 3;
  // Indexed by label index (favor, against[, neutral]).
  std::vector<ClassScore> per_class;
  double f_avg = 0.0;
  // confusion[gold][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t count = 0;
  Subset subset = Subset::kAll;
  // Set for a subset with no examples; scores are then meaningless.
  bool absent = false;

  double f1(StanceLabel label) const { return per_class.at(LabelIndex(label)).f1; }

  nlohmann::json ToJson() const;
  static EvalReport FromJson(const nlohmann::json& j);
};

// Per-class F1 = 2PR/(P+R), with F1 = 0 whenever P + R = 0 (a class with no
// predictions or no gold occurrences contributes 0 precision or recall).
// f_avg is the mean over exactly `arity` classes.
// Throws Error(kLengthMismatch) / Error(kLabelOutOfRange).
EvalReport MacroF1(std::span<const int> predictions, std::span<const int> gold,
                   int arity);
EvalReport MacroF1(std::span<const StanceLabel> predictions,
                   std::span<const StanceLabel> gold, int arity);

struct VastReports {
  EvalReport zero_shot;
  EvalReport few_shot;
  EvalReport overall;
};

// `membership[i]` says which subset example i belongs to; the overall report
// is computed over all examples, not averaged from the subsets.
// Throws Error(kPartitionMismatch).
VastReports EvaluateVast(std::span<const int> predictions,
                         std::span<const int> gold,
                         std::span<const Subset> membership);

}  // namespace wsbert
