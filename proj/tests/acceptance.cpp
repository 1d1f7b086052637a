// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "test_util.hpp"
#include "wsbert/datasets.hpp"
#include "wsbert/encoding.hpp"
#include "wsbert/evaluation.hpp"
#include "wsbert/knowledge.hpp"
#include "wsbert/model.hpp"
#include "wsbert/tables.hpp"
#include "wsbert/training.hpp"

using namespace wsbert;
using namespace wsbert::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string RandomText(std::mt19937_64& rng, std::size_t max_len) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,!?'#@-:";
  std::uniform_int_distribution<std::size_t> len(1, max_len), pick(0, alphabet.size() - 1);
  std::string s;
  std::size_t n = len(rng);
  while (s.size() < n) s += alphabet[pick(rng)];
  if (s.find_first_not_of(' ') == std::string::npos) s = "z";
  return s;
}

Outcome TemplateExactness() {
  std::mt19937_64 rng(1);
  std::vector<std::string> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back("Text: " + RandomText(rng, 40) + " Target: x");
  Tokenizer tok = Tokenizer::Train(corpus, 2000);
  InputEncoder enc(Variant::kSingle, &tok, nullptr, {});
  int mismatches = 0;
  for (int i = 0; i < 50; ++i) {
    std::string d = RandomText(rng, 80), t = RandomText(rng, 20), w = RandomText(rng, 100);
    EncodedInput in = enc.Encode(d, t, w);
    if (tok.Decode(SegmentIds(in.streams[0], 0)) != "Text: " + d + " Target: " + t) ++mismatches;
  }
  return {mismatches == 0, "50 triples, " + std::to_string(mismatches) + " mismatches"};
}

Outcome MetricOracle() {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int arity : {2, 3}) {
    std::uniform_int_distribution<int> label(0, arity - 1);
    for (int trial = 0; trial < 1000; ++trial) {
      int n = 1 + static_cast<int>(rng() % 64);
      std::vector<int> pred(n), gold(n);
      for (int i = 0; i < n; ++i) {
        pred[i] = label(rng);
        gold[i] = label(rng);
      }
      EvalReport r = MacroF1(pred, gold, arity);
      double sum = 0.0;
      for (int c = 0; c < arity; ++c) {
        double tp = 0, fp = 0, fn = 0;
        for (int i = 0; i < n; ++i) {
          if (pred[i] == c && gold[i] == c) ++tp;
          if (pred[i] == c && gold[i] != c) ++fp;
          if (pred[i] != c && gold[i] == c) ++fn;
        }
        double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
        worst = std::max(worst, std::abs(r.per_class[c].f1 - f));
        sum += f;
      }
      worst = std::max(worst, std::abs(r.f_avg - sum / arity));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "2000 random cases, max deviation %.3g", worst);
  return {worst <= 1e-12, buf};
}

Outcome CrossTargetRule() {
  std::vector<StanceExample> xs;
  int n = 0;
  for (auto [target, tr, va, te] : {std::tuple{"Trump", 9, 3, 3}, {"Biden", 6, 2, 2}, {"Sanders", 5, 2, 2}}) {
    for (auto [split, count] : {std::pair{Split::kTrain, tr}, {Split::kValidation, va}, {Split::kTest, te}}) {
      for (int i = 0; i < count; ++i) {
        xs.push_back({"id" + std::to_string(n++), "doc", target,
                      i % 2 ? StanceLabel::kAgainst : StanceLabel::kFavor, split, std::nullopt});
      }
    }
  }
  SplitPlan plan = BuildSplit(xs, Protocol::kCrossTarget, "Trump", "Biden");
  std::set<std::string> test(plan.test.begin(), plan.test.end()), want, source;
  for (const auto& e : xs) {
    if (e.target == "Biden") want.insert(e.example_id);
    if (e.target == "Trump") source.insert(e.example_id);
  }
  std::size_t leaked = 0;
  for (const auto& id : test) leaked += source.contains(id);
  bool ok = test == want && plan.test.size() == want.size() && leaked == 0;
  return {ok, "test " + std::to_string(plan.test.size()) + " ids, expected " +
                  std::to_string(want.size()) + ", source ids in test " + std::to_string(leaked)};
}

std::vector<EncodedInput> TwoExamples(StanceModel& model) {
  return {EncodeFor(model, "I love it", "Trump", "a politician"),
          EncodeFor(model, "I hate it", "Biden", "a politician too")};
}

Outcome FreezingCorrectness() {
  StanceModel model = TinyModel(Variant::kDual, 2, std::size_t{1});
  auto batch = TwoExamples(model);
  model.ZeroGrad();
  model.ForwardBackward(batch, {0, 1});
  TransformerEncoder& k = *model.knowledge_encoder();
  std::size_t frozen = 0, nonzero_frozen = 0;
  for (auto* p : k.Parameters()) {
    if (!p->trainable) {
      ++frozen;
      if (p->grad.norm() != 0.0) ++nonzero_frozen;
    }
  }
  double top_norm = 0.0;
  for (auto* p : k.LayerParameters(k.depth() - 1)) top_norm += p->grad.squaredNorm();
  top_norm = std::sqrt(top_norm);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu frozen tensors, %zu with nonzero grad; top layer grad norm %.3g",
                frozen, nonzero_frozen, top_norm);
  return {frozen > 0 && nonzero_frozen == 0 && top_norm > 0.0, buf};
}

Outcome HeadGradientCheck() {
  StanceModel model = TinyModel(Variant::kDual, 3);
  auto batch = TwoExamples(model);
  std::vector<int> gold = {0, 2};
  model.ZeroGrad();
  model.ForwardBackward(batch, gold);
  double worst = 0.0;
  const double h = 1e-6;
  for (auto* p : model.HeadParameters()) {
    Matrix analytic = p->grad;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      double saved = v;
      v = saved + h;
      double up = CrossEntropy(model.Forward(batch, Mode::kInference), gold, nullptr);
      v = saved - h;
      double down = CrossEntropy(model.Forward(batch, Mode::kInference), gold, nullptr);
      v = saved;
      double numeric = (up - down) / (2 * h);
      double a = analytic.data()[i];
      double rel = std::abs(a - numeric) / std::max(1e-8, std::max(std::abs(a), std::abs(numeric)));
      worst = std::max(worst, rel);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max relative error %.3g", worst);
  return {worst <= 1e-4, buf};
}

Outcome DualLocality() {
  StanceModel model = TinyModel(Variant::kDual, 2, std::nullopt, 0.1);
  const auto h1 = static_cast<Eigen::Index>(model.pair_encoder().hidden());
  std::vector<EncodedInput> base = {EncodeFor(model, "I love it", "Trump", "a politician")};
  Matrix ref = model.Representations(base, Mode::kInference);
  std::mt19937_64 rng(6);
  int differing = 0, tail_changed = 0;
  for (int i = 0; i < 20; ++i) {
    std::vector<EncodedInput> alt = {EncodeFor(model, "I love it", "Trump", RandomText(rng, 60))};
    Matrix r = model.Representations(alt, Mode::kInference);
    if (r.leftCols(h1) != ref.leftCols(h1)) ++differing;
    if (r.rightCols(r.cols() - h1) != ref.rightCols(ref.cols() - h1)) ++tail_changed;
  }
  return {differing == 0 && tail_changed > 0,
          "20 knowledge variants, " + std::to_string(differing) + " changed pair coordinates"};
}

Outcome EarlyStoppingCurves() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> noise(-0.03, 0.03);
  int wrong = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> curve;
    double level = 0.4;
    std::size_t plateau = 5 + rng() % 60;
    for (std::size_t e = 0; e < 100; ++e) {
      if (e < plateau) level += 0.005;
      curve.push_back(std::round((level + noise(rng)) * 1000) / 1000);
    }
    // Reference rule: stop once 10 epochs pass without a strict improvement.
    std::size_t best = 0, stop = 0;
    double best_value = -1;
    for (std::size_t e = 0; e < curve.size(); ++e) {
      if (curve[e] > best_value) {
        best_value = curve[e];
        best = e + 1;
      }
      stop = e + 1;
      if (stop - best >= 10) break;
    }
    StoppingOutcome got = SimulateEarlyStopping(curve, 10, 100);
    if (got.best_epoch != best || got.stopped_epoch != stop) ++wrong;
  }
  return {wrong == 0, "20 curves, " + std::to_string(wrong) + " disagreements"};
}

Outcome TinyOverfit() {
  const std::string spec = "mini:layers=2,hidden=64,heads=4,intermediate=128,positions=128";
  std::vector<std::string> targets = {"Trump", "Biden", "Sanders", "Fauci"};
  std::vector<std::string> favor = {"love", "support", "admire", "back"};
  std::vector<std::string> against = {"hate", "oppose", "despise", "reject"};
  std::vector<std::string> corpus;
  std::vector<std::tuple<std::string, std::string, std::string, int>> rows;
  for (int i = 0; i < 64; ++i) {
    int label = i % 2;
    const std::string& t = targets[(i / 2) % 4];
    std::string doc = "I " + (label ? against : favor)[(i / 8) % 4] + " " + t;
    std::string wiki = t + " is a public figure.";
    rows.emplace_back(doc, t, wiki, label);
    corpus.push_back(doc);
    corpus.push_back(wiki);
  }
  Tokenizer tok = Tokenizer::Train(corpus, 1000);
  Rng rng(8);
  ModelConfig mc;
  mc.variant = Variant::kDual;
  mc.pair_encoder_id = spec;
  mc.knowledge_encoder_id = spec;
  mc.num_labels = 2;
  mc.wiki_finetune_top_layers = 1;
  StanceModel model(mc, CreateEncoder(spec, "pair_encoder", tok, rng),
                    CreateEncoder(spec, "knowledge_encoder", tok, rng), 9);
  EncodedSplit split;
  for (const auto& [d, t, w, y] : rows) {
    split.inputs.push_back(EncodeFor(model, d, t, w));
    split.labels.push_back(y);
  }
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 8;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  cfg.wiki_finetune_top_layers = 1;
  std::size_t reached = 0;
  TrainResult r = Train(model, split, split, cfg, [&](const EpochRecord& e) {
    if (!reached && e.validation_metric >= 0.95) reached = e.epoch;
  });
  double f1 = MacroF1(Predict(model, split.inputs), split.labels, 2).f_avg;
  char buf[96];
  std::snprintf(buf, sizeof buf, "train macro-F1 %.3f, first >= 0.95 at epoch %zu", f1, reached);
  return {f1 >= 0.95 && reached > 0 && reached <= 30, buf};
}

Outcome FallbackTotality() {
  StubPageSource source;
  std::vector<std::string> targets;
  for (int i = 0; i < 100; ++i) {
    targets.push_back("target " + std::to_string(i));
    if (i % 5 != 0) source.AddPage(targets.back(), "Page " + std::to_string(i), "About target " + std::to_string(i) + ".");
  }
  KnowledgeCache cache;
  ResolverOptions options;
  options.min_request_interval = std::chrono::milliseconds(0);
  options.parallelism = 4;
  KnowledgeResolver resolver(cache, {}, &source, options);
  BulkResult bulk = resolver.ResolveAll(targets);
  std::vector<KnowledgeRecord> records;
  for (auto& r : bulk.records) {
    if (r) records.push_back(*r);
  }
  auto texts = KnowledgeTexts(records);
  int fallback = 0, bad_fallback = 0, missing = 0;
  for (const auto& r : records) {
    if (r.status == KnowledgeStatus::kFallback) {
      ++fallback;
      if (r.summary != r.target || r.page_title) ++bad_fallback;
    }
  }
  // Three examples per target, each joined to its knowledge text.
  for (const auto& t : targets) {
    for (int k = 0; k < 3; ++k) {
      auto it = texts.find(t);
      if (it == texts.end() || it->second.empty()) ++missing;
    }
  }
  bool ok = bulk.failures.empty() && fallback == 20 && bad_fallback == 0 && missing == 0;
  return {ok, std::to_string(fallback) + " fallbacks, " + std::to_string(bad_fallback) +
                  " malformed, " + std::to_string(missing) + " examples without knowledge"};
}

Outcome TableAverages() {
  auto avg = [](const std::vector<double>& scores) {
    TableRow row{"WS-BERT", {}};
    for (std::size_t i = 0; i < scores.size(); ++i) row.cells.push_back({"c" + std::to_string(i), scores[i], 2});
    return RoundOneDecimal(EmitTable({row}).averages[0]);
  };
  double t1 = avg({85.8, 83.5, 79.0});
  double t2 = avg({83.6, 85.0, 86.6, 82.2});
  double t3 = avg({68.3, 64.4, 67.7, 69.0, 63.6, 76.8});
  bool ok = std::abs(t1 - 82.8) <= 0.05 && std::abs(t2 - 84.4) <= 0.05 && std::abs(t3 - 68.3) <= 0.05;
  char buf[96];
  std::snprintf(buf, sizeof buf, "averages %.1f / %.1f / %.1f", t1, t2, t3);
  return {ok, buf};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"template byte-exactness", TemplateExactness},
      {"metric oracle equivalence", MetricOracle},
      {"cross-target split rule", CrossTargetRule},
      {"freezing correctness", FreezingCorrectness},
      {"head gradient check", HeadGradientCheck},
      {"dual locality", DualLocality},
      {"early stopping", EarlyStoppingCurves},
      {"tiny-overfit smoke", TinyOverfit},
      {"knowledge fallback totality", FallbackTotality},
      {"table emission", TableAverages},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
