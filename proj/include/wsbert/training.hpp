#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsbert/encoding.hpp"
#include "wsbert/model.hpp"
#include "wsbert/nn.hpp"

namespace wsbert {

struct TrainConfig {
  double learning_rate = 2e-5;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double weight_decay = 5e-5;
  std::optional<std::size_t> wiki_finetune_top_layers;
  std::uint64_t seed = 42;
  // Global gradient-norm clip; 0 disables it.
  double clip_norm = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Throws Error(kConfigInvalid).
  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_metric = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  bool patience_triggered = false;

  double best_metric() const;
  nlohmann::json ToJson() const;
};

// Stops once `patience` consecutive epochs pass without a strictly better
// validation metric, or after max_epochs.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, std::size_t max_epochs);

  // Records one epoch; returns true when training should stop now.
  bool Observe(double metric);

  // True when the last observed epoch set a new best.
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }
  std::size_t epochs_seen() const { return epochs_; }
  bool patience_triggered() const { return patience_triggered_; }

 private:
  std::size_t patience_;
  std::size_t max_epochs_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_metric_ = 0.0;
  bool improved_ = false;
  bool patience_triggered_ = false;
};

struct StoppingOutcome {
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
};

// Replays a validation curve through EarlyStopping.
StoppingOutcome SimulateEarlyStopping(std::span<const double> metrics,
                                      std::size_t patience,
                                      std::size_t max_epochs);

// Adam with decoupled weight decay. Frozen parameters are skipped.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, const TrainConfig& config);

  void Step();
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_;
  double weight_decay_;
  double beta1_, beta2_, eps_;
  std::size_t step_ = 0;
};

// Scales gradients so their global norm is at most max_norm; returns the
// norm before scaling. Throws Error(kNonFiniteLoss) on a non-finite norm.
double ClipGradNorm(const std::vector<Parameter*>& params, double max_norm);

struct EncodedSplit {
  std::vector<EncodedInput> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
};

std::vector<int> Predict(StanceModel& model, std::span<const EncodedInput> inputs,
                         std::size_t batch_size = 32);

struct TrainResult {
  TrainHistory history;
  double best_validation_metric = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Finetunes `model` and leaves it holding the weights of its best
// validation epoch. Throws Error(kEmptySplit) / Error(kNonFiniteLoss).
TrainResult Train(StanceModel& model, const EncodedSplit& train,
                  const EncodedSplit& validation, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct GridPoint {
  double learning_rate = 2e-5;
  std::optional<std::size_t> top_layers;

  nlohmann::json ToJson() const;
};

struct GridRun {
  GridPoint point;
  std::optional<double> validation_metric;
  std::string error;
};

struct GridResult {
  std::vector<GridRun> runs;
  std::size_t best_index = 0;

  const GridRun& best() const { return runs.at(best_index); }
};

// Learning rates {1e-5, 2e-5}, crossed with knowledge-encoder top layers
// {1, 2} for the dual variant.
std::vector<GridPoint> DefaultGrid(Variant variant);

// Highest metric wins; ties go to the lower learning rate, then to fewer
// finetuned layers. Failed runs are ignored. Throws Error(kConfigInvalid)
// when no run succeeded.
std::size_t SelectBest(const std::vector<GridRun>& runs);

// Runs every grid point through `run` (which returns the best validation
// metric or throws) and selects the winner.
GridResult GridSearch(const std::vector<GridPoint>& grid,
                      const std::function<double(const GridPoint&)>& run);

}  // namespace wsbert
