#include "wsbert/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wsbert/error.hpp"
#include "wsbert/evaluation.hpp"

namespace wsbert {

void TrainConfig::Validate() const {
  auto fail = [](const std::string& m) {
    throw Error(ErrorCode::kConfigInvalid, "train config: " + m);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (patience == 0) fail("patience must be positive");
  if (patience > max_epochs) fail("patience exceeds max_epochs");
  if (weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (clip_norm < 0.0) fail("clip_norm must be non-negative");
  if (wiki_finetune_top_layers && *wiki_finetune_top_layers == 0) {
    fail("wiki_finetune_top_layers must be positive");
  }
}

nlohmann::json TrainConfig::ToJson() const {
  nlohmann::json j;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["weight_decay"] = weight_decay;
  j["wiki_finetune_top_layers"] =
      wiki_finetune_top_layers ? nlohmann::json(*wiki_finetune_top_layers)
                               : nlohmann::json("all");
  j["seed"] = seed;
  j["clip_norm"] = clip_norm;
  j["adam"] = {{"beta1", adam_beta1},
               {"beta2", adam_beta2},
               {"epsilon", adam_epsilon},
               {"weight_decay_mode", "decoupled"}};
  return j;
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  if (j.contains("wiki_finetune_top_layers") &&
      j["wiki_finetune_top_layers"].is_number_integer()) {
    c.wiki_finetune_top_layers = j["wiki_finetune_top_layers"].get<std::size_t>();
  }
  c.seed = j.value("seed", c.seed);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  if (j.value("strict", false)) c.clip_norm = 0.0;
  if (j.contains("adam")) {
    const auto& a = j["adam"];
    c.adam_beta1 = a.value("beta1", c.adam_beta1);
    c.adam_beta2 = a.value("beta2", c.adam_beta2);
    c.adam_epsilon = a.value("epsilon", c.adam_epsilon);
  }
  return c;
}

double TrainHistory::best_metric() const {
  if (best_epoch == 0 || best_epoch > epochs.size()) return 0.0;
  return epochs[best_epoch - 1].validation_metric;
}

nlohmann::json TrainHistory::ToJson() const {
  nlohmann::json j;
  j["best_epoch"] = best_epoch;
  j["stopped_epoch"] = stopped_epoch;
  j["patience_triggered"] = patience_triggered;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"validation_metric", e.validation_metric}});
  }
  return j;
}

EarlyStopping::EarlyStopping(std::size_t patience, std::size_t max_epochs)
    : patience_(patience), max_epochs_(max_epochs) {}

bool EarlyStopping::Observe(double metric) {
  ++epochs_;
  improved_ = best_epoch_ == 0 || metric > best_metric_;
  if (improved_) {
    best_metric_ = metric;
    best_epoch_ = epochs_;
  }
  if (epochs_ - best_epoch_ >= patience_) {
    patience_triggered_ = true;
    return true;
  }
  return epochs_ >= max_epochs_;
}

StoppingOutcome SimulateEarlyStopping(std::span<const double> metrics,
                                      std::size_t patience,
                                      std::size_t max_epochs) {
  EarlyStopping stopper(patience, max_epochs);
  for (double m : metrics) {
    if (stopper.Observe(m)) break;
  }
  return {stopper.best_epoch(), stopper.epochs_seen()};
}

AdamW::AdamW(std::vector<Parameter*> params, const TrainConfig& config)
    : params_(std::move(params)),
      lr_(config.learning_rate),
      weight_decay_(config.weight_decay),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_epsilon) {
  for (const auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::Step() {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.trainable) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value *= 1.0 - lr_ * weight_decay_;
    p.value.array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

double ClipGradNorm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) {
    if (p->trainable) sq += p->grad.squaredNorm();
  }
  double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    throw Error(ErrorCode::kNonFiniteLoss, "gradient norm is not finite");
  }
  if (max_norm > 0.0 && norm > max_norm) {
    double scale = max_norm / (norm + 1e-6);
    for (auto* p : params) {
      if (p->trainable) p->grad *= scale;
    }
  }
  return norm;
}

std::vector<int> Predict(StanceModel& model, std::span<const EncodedInput> inputs,
                         std::size_t batch_size) {
  std::vector<int> predictions;
  predictions.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
    std::size_t n = std::min(batch_size, inputs.size() - start);
    Matrix logits = model.Forward(inputs.subspan(start, n), Mode::kInference);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index best = 0;
      logits.row(r).maxCoeff(&best);
      predictions.push_back(static_cast<int>(best));
    }
  }
  return predictions;
}

TrainResult Train(StanceModel& model, const EncodedSplit& train,
                  const EncodedSplit& validation, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.Validate();
  if (train.size() == 0) throw Error(ErrorCode::kEmptySplit, "empty train split");
  if (validation.size() == 0) {
    throw Error(ErrorCode::kEmptySplit, "empty validation split");
  }
  if (train.labels.size() != train.size() ||
      validation.labels.size() != validation.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one label per encoded input needed");
  }
  if (model.config().variant == Variant::kDual &&
      config.wiki_finetune_top_layers) {
    model.FreezeKnowledgeEncoder(config.wiki_finetune_top_layers);
  }

  Rng shuffle_rng(config.seed);
  std::vector<Parameter*> params = model.Parameters();
  AdamW optimizer(params, config);
  EarlyStopping stopper(config.patience, config.max_epochs);
  std::vector<Matrix> best_state = model.SnapshotValues();
  const int arity = model.config().num_labels;

  TrainResult result;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t n = std::min(config.batch_size, order.size() - start);
      std::vector<EncodedInput> batch;
      std::vector<int> gold;
      for (std::size_t k = 0; k < n; ++k) {
        batch.push_back(train.inputs[order[start + k]]);
        gold.push_back(train.labels[order[start + k]]);
      }
      model.ZeroGrad();
      double loss = model.ForwardBackward(batch, gold);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "loss " + std::to_string(loss) + " at epoch " +
                        std::to_string(epoch) + ", batch " +
                        std::to_string(batches + 1) + " (lr " +
                        std::to_string(config.learning_rate) + ")");
      }
      ClipGradNorm(params, config.clip_norm);
      optimizer.Step();
      loss_sum += loss;
      ++batches;
    }

    std::vector<int> predictions = Predict(model, validation.inputs);
    double metric = MacroF1(predictions, validation.labels, arity).f_avg;
    EpochRecord record{epoch, loss_sum / static_cast<double>(batches), metric};
    result.history.epochs.push_back(record);
    spdlog::debug("epoch {}: train loss {:.6f}, validation macro-F1 {:.4f}",
                  epoch, record.train_loss, metric);
    if (on_epoch) on_epoch(record);

    bool stop = stopper.Observe(metric);
    if (stopper.improved()) best_state = model.SnapshotValues();
    if (stop) break;
  }

  model.RestoreValues(best_state);
  result.history.best_epoch = stopper.best_epoch();
  result.history.stopped_epoch = stopper.epochs_seen();
  result.history.patience_triggered = stopper.patience_triggered();
  result.best_validation_metric = stopper.best_metric();
  return result;
}

nlohmann::json GridPoint::ToJson() const {
  return {{"learning_rate", learning_rate},
          {"top_layers",
           top_layers ? nlohmann::json(*top_layers) : nlohmann::json("all")}};
}

std::vector<GridPoint> DefaultGrid(Variant variant) {
  std::vector<GridPoint> grid;
  for (double lr : {1e-5, 2e-5}) {
    if (variant == Variant::kDual) {
      for (std::size_t layers : {1, 2}) grid.push_back({lr, layers});
    } else {
      grid.push_back({lr, std::nullopt});
    }
  }
  return grid;
}

std::size_t SelectBest(const std::vector<GridRun>& runs) {
  auto layers = [](const GridPoint& p) {
    return p.top_layers.value_or(std::numeric_limits<std::size_t>::max());
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!runs[i].validation_metric) continue;
    if (!best) {
      best = i;
      continue;
    }
    const GridRun& a = runs[i];
    const GridRun& b = runs[*best];
    double ma = *a.validation_metric;
    double mb = *b.validation_metric;
    bool better =
        ma > mb ||
        (ma == mb && (a.point.learning_rate < b.point.learning_rate ||
                      (a.point.learning_rate == b.point.learning_rate &&
                       layers(a.point) < layers(b.point))));
    if (better) best = i;
  }
  if (!best) {
    throw Error(ErrorCode::kConfigInvalid, "every grid point failed");
  }
  return *best;
}

GridResult GridSearch(const std::vector<GridPoint>& grid,
                      const std::function<double(const GridPoint&)>& run) {
  if (grid.empty()) throw Error(ErrorCode::kConfigInvalid, "empty grid");
  GridResult result;
  for (const auto& point : grid) {
    GridRun r;
    r.point = point;
    try {
      r.validation_metric = run(point);
    } catch (const Error& e) {
      r.error = e.what();
      spdlog::warn("grid point lr={} failed: {}", point.learning_rate, e.what());
    }
    result.runs.push_back(std::move(r));
  }
  result.best_index = SelectBest(result.runs);
  return result;
}

}  // namespace wsbert
