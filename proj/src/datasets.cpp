#include "wsbert/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "wsbert/error.hpp"
#include "wsbert/knowledge.hpp"

namespace wsbert {

namespace {

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string Unescape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] == '\\' && i + 1 < field.size()) {
      char next = field[i + 1];
      if (next == 't') { out.push_back('\t'); ++i; continue; }
      if (next == 'n') { out.push_back('\n'); ++i; continue; }
      if (next == 'r') { out.push_back('\r'); ++i; continue; }
      if (next == '\\') { out.push_back('\\'); ++i; continue; }
    }
    out.push_back(field[i]);
  }
  return out;
}

std::string Escape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (char c : field) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::optional<StanceLabel> ParseLabel(
    std::string_view raw, const std::map<std::string, StanceLabel>& aliases) {
  std::string key = Lower(Trim(raw));
  if (key == "favor") return StanceLabel::kFavor;
  if (key == "against") return StanceLabel::kAgainst;
  if (key == "neutral") return StanceLabel::kNeutral;
  if (auto it = aliases.find(key); it != aliases.end()) return it->second;
  return std::nullopt;
}

std::vector<std::string> IdsOf(const std::vector<const StanceExample*>& rows) {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto* row : rows) ids.push_back(row->example_id);
  return ids;
}

}  // namespace

std::string_view LabelName(StanceLabel label) {
  switch (label) {
    case StanceLabel::kFavor: return "favor";
    case StanceLabel::kAgainst: return "against";
    case StanceLabel::kNeutral: return "neutral";
  }
  return "favor";
}

StanceLabel LabelFromIndex(int index) {
  if (index < 0 || index > 2) {
    throw Error(ErrorCode::kLabelOutOfRange,
                "label index " + std::to_string(index));
  }
  return static_cast<StanceLabel>(index);
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view text) {
  std::string key = Lower(text);
  if (key == "train") return Split::kTrain;
  if (key == "validation" || key == "val" || key == "dev") {
    return Split::kValidation;
  }
  if (key == "test") return Split::kTest;
  throw Error(ErrorCode::kConfigInvalid, "unknown split '" + key + "'");
}

std::string_view DatasetNameString(DatasetName name) {
  switch (name) {
    case DatasetName::kPStance: return "p_stance";
    case DatasetName::kCovid19Stance: return "covid19_stance";
    case DatasetName::kVast: return "vast";
  }
  return "vast";
}

DatasetName ParseDatasetName(std::string_view text) {
  std::string key = Lower(text);
  if (key == "p_stance") return DatasetName::kPStance;
  if (key == "covid19_stance") return DatasetName::kCovid19Stance;
  if (key == "vast") return DatasetName::kVast;
  throw Error(ErrorCode::kConfigInvalid, "unknown dataset '" + key + "'");
}

std::string_view ProtocolName(Protocol protocol) {
  switch (protocol) {
    case Protocol::kTargetSpecific: return "target_specific";
    case Protocol::kCrossTarget: return "cross_target";
    case Protocol::kZeroFewShot: return "zero_few_shot";
  }
  return "zero_few_shot";
}

Protocol ParseProtocol(std::string_view text) {
  std::string key = Lower(text);
  if (key == "target_specific") return Protocol::kTargetSpecific;
  if (key == "cross_target") return Protocol::kCrossTarget;
  if (key == "zero_few_shot") return Protocol::kZeroFewShot;
  throw Error(ErrorCode::kConfigInvalid, "unknown protocol '" + key + "'");
}

DatasetSpec DatasetSpec::Defaults(DatasetName name) {
  DatasetSpec spec;
  spec.name = name;
  switch (name) {
    case DatasetName::kPStance:
      spec.label_arity = 2;
      spec.targets = {"Biden", "Sanders", "Trump"};
      break;
    case DatasetName::kCovid19Stance:
      spec.label_arity = 3;
      spec.targets = {"Anthony Fauci", "stay-at-home orders",
                      "wear a face mask", "keeping school closed"};
      break;
    case DatasetName::kVast:
      spec.label_arity = 3;
      break;
  }
  return spec;
}

void DatasetSpec::Validate() const {
  int expected = name == DatasetName::kPStance ? 2 : 3;
  if (label_arity != expected) {
    throw Error(ErrorCode::kConfigInvalid,
                std::string(DatasetNameString(name)) + " has label arity " +
                    std::to_string(expected) + ", not " +
                    std::to_string(label_arity));
  }
  if (name != DatasetName::kVast && targets.empty()) {
    throw Error(ErrorCode::kConfigInvalid,
                std::string(DatasetNameString(name)) +
                    " needs a non-empty target list");
  }
  if (source_files.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "dataset lists no source files");
  }
}

LoadReport LoadDatasetWithReport(const DatasetSpec& spec) {
  LoadReport report;
  std::unordered_set<std::string> seen_ids;

  for (const auto& [split, path] : spec.source_files) {
    std::ifstream in(path);
    if (!in) {
      throw Error(ErrorCode::kMissingFile,
                  "cannot open " + std::string(SplitName(split)) +
                      " file " + path.string());
    }
    std::string file = path.string();
    std::string line;
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kSchemaMismatch, file + " has no header");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = SplitTabs(line);
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) return std::nullopt;
      return static_cast<std::size_t>(it - header.begin());
    };
    auto id_col = column("example_id");
    auto doc_col = column("document");
    auto target_col = column("target");
    auto label_col = column("label");
    auto seen_col = column("seen");
    if (!id_col || !doc_col || !target_col || !label_col) {
      throw Error(ErrorCode::kSchemaMismatch,
                  file + " header must contain example_id, document, "
                         "target and label columns");
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> fields = SplitTabs(line);
      auto issue = [&](std::string message) {
        report.issues.push_back({file, line_no, std::move(message)});
      };
      if (fields.size() != header.size()) {
        issue("expected " + std::to_string(header.size()) + " columns, got " +
              std::to_string(fields.size()));
        continue;
      }
      StanceExample example;
      example.example_id = Unescape(fields[*id_col]);
      example.document = Unescape(fields[*doc_col]);
      example.target = Unescape(fields[*target_col]);
      example.split = split;
      if (Trim(example.example_id).empty()) {
        issue("empty example_id");
        continue;
      }
      if (Trim(example.document).empty() || Trim(example.target).empty()) {
        issue("example " + example.example_id + " has empty document or target");
        continue;
      }
      auto label = ParseLabel(fields[*label_col], spec.label_aliases);
      if (!label) {
        issue("example " + example.example_id + " has unknown label '" +
              fields[*label_col] + "'");
        continue;
      }
      if (LabelIndex(*label) >= spec.label_arity) {
        issue("example " + example.example_id + " has label '" +
              std::string(LabelName(*label)) + "' outside arity " +
              std::to_string(spec.label_arity));
        continue;
      }
      example.label = *label;
      if (seen_col) {
        std::string flag = Lower(Trim(fields[*seen_col]));
        if (flag == "1" || flag == "true") example.seen = true;
        else if (flag == "0" || flag == "false") example.seen = false;
        else if (!flag.empty()) {
          issue("example " + example.example_id + " has bad seen flag '" +
                flag + "'");
          continue;
        }
      }
      if (!seen_ids.insert(example.example_id).second) {
        issue("duplicate example_id " + example.example_id);
        continue;
      }
      report.examples.push_back(std::move(example));
    }
  }
  return report;
}

std::vector<StanceExample> LoadDataset(const DatasetSpec& spec) {
  LoadReport report = LoadDatasetWithReport(spec);
  if (!report.issues.empty()) {
    std::ostringstream message;
    message << report.issues.size() << " malformed row(s):";
    for (const auto& issue : report.issues) {
      message << "\n  " << issue.file << ":" << issue.line << ": "
              << issue.message;
    }
    throw Error(ErrorCode::kSchemaMismatch, message.str());
  }
  return std::move(report.examples);
}

void WriteSplitFile(const std::filesystem::path& path,
                    const std::vector<StanceExample>& examples) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  bool with_seen = std::any_of(examples.begin(), examples.end(),
                               [](const auto& e) { return e.seen.has_value(); });
  out << "example_id\tdocument\ttarget\tlabel";
  if (with_seen) out << "\tseen";
  out << '\n';
  for (const auto& e : examples) {
    out << Escape(e.example_id) << '\t' << Escape(e.document) << '\t'
        << Escape(e.target) << '\t' << LabelName(e.label);
    if (with_seen) {
      out << '\t' << (e.seen ? (*e.seen ? "1" : "0") : "");
    }
    out << '\n';
  }
}

nlohmann::json SplitPlan::ToManifest() const {
  nlohmann::json j;
  j["protocol"] = ProtocolName(protocol);
  j["source_target"] =
      source_target ? nlohmann::json(*source_target) : nlohmann::json(nullptr);
  j["destination_target"] = destination_target
                                ? nlohmann::json(*destination_target)
                                : nlohmann::json(nullptr);
  j["train"] = train;
  j["validation"] = validation;
  j["test"] = test;
  return j;
}

SplitPlan SplitPlan::FromManifest(const nlohmann::json& manifest) {
  SplitPlan plan;
  plan.protocol = ParseProtocol(manifest.at("protocol").get<std::string>());
  if (!manifest.at("source_target").is_null()) {
    plan.source_target = manifest["source_target"].get<std::string>();
  }
  if (!manifest.at("destination_target").is_null()) {
    plan.destination_target = manifest["destination_target"].get<std::string>();
  }
  plan.train = manifest.at("train").get<std::vector<std::string>>();
  plan.validation = manifest.at("validation").get<std::vector<std::string>>();
  plan.test = manifest.at("test").get<std::vector<std::string>>();
  return plan;
}

SplitPlan BuildSplit(const std::vector<StanceExample>& examples,
                     Protocol protocol,
                     const std::optional<std::string>& source_target,
                     const std::optional<std::string>& destination_target) {
  SplitPlan plan;
  plan.protocol = protocol;
  std::set<std::string> targets = TargetSet(examples);
  auto require_target = [&](const std::optional<std::string>& t,
                            std::string_view role) {
    if (!t) {
      throw Error(ErrorCode::kUnknownTarget,
                  std::string(ProtocolName(protocol)) + " needs a " +
                      std::string(role) + " target");
    }
    if (!targets.contains(*t)) {
      throw Error(ErrorCode::kUnknownTarget,
                  std::string(role) + " target '" + *t +
                      "' does not occur in the data");
    }
  };

  std::vector<const StanceExample*> train, validation, test;
  auto select = [&](const std::string* target, Split split) {
    std::vector<const StanceExample*> rows;
    for (const auto& e : examples) {
      if (e.split == split && (target == nullptr || e.target == *target)) {
        rows.push_back(&e);
      }
    }
    return rows;
  };

  switch (protocol) {
    case Protocol::kTargetSpecific: {
      require_target(source_target, "source");
      if (destination_target) {
        throw Error(ErrorCode::kUnknownTarget,
                    "target_specific takes no destination target");
      }
      plan.source_target = source_target;
      train = select(&*source_target, Split::kTrain);
      validation = select(&*source_target, Split::kValidation);
      test = select(&*source_target, Split::kTest);
      break;
    }
    case Protocol::kCrossTarget: {
      require_target(source_target, "source");
      require_target(destination_target, "destination");
      if (*source_target == *destination_target) {
        throw Error(ErrorCode::kUnknownTarget,
                    "cross_target needs distinct source and destination, got '" +
                        *source_target + "' twice");
      }
      plan.source_target = source_target;
      plan.destination_target = destination_target;
      train = select(&*source_target, Split::kTrain);
      validation = select(&*source_target, Split::kValidation);
      for (Split split : {Split::kTrain, Split::kValidation, Split::kTest}) {
        auto part = select(&*destination_target, split);
        test.insert(test.end(), part.begin(), part.end());
      }
      break;
    }
    case Protocol::kZeroFewShot: {
      if (source_target || destination_target) {
        throw Error(ErrorCode::kUnknownTarget,
                    "zero_few_shot uses the published splits; no targets");
      }
      train = select(nullptr, Split::kTrain);
      validation = select(nullptr, Split::kValidation);
      test = select(nullptr, Split::kTest);
      break;
    }
  }

  auto check = [&](const std::vector<const StanceExample*>& rows,
                   std::string_view name) {
    if (rows.empty()) {
      throw Error(ErrorCode::kEmptySplit,
                  std::string(ProtocolName(protocol)) + " produced an empty " +
                      std::string(name) + " split");
    }
  };
  check(train, "train");
  check(validation, "validation");
  check(test, "test");

  plan.train = IdsOf(train);
  plan.validation = IdsOf(validation);
  plan.test = IdsOf(test);
  return plan;
}

SplitData Materialize(const SplitPlan& plan,
                      const std::vector<StanceExample>& examples) {
  std::unordered_map<std::string, const StanceExample*> by_id;
  for (const auto& e : examples) by_id.emplace(e.example_id, &e);
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<StanceExample> rows;
    rows.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::kUnknownTarget,
                    "split plan references unknown example " + id);
      }
      rows.push_back(*it->second);
    }
    return rows;
  };
  return {gather(plan.train), gather(plan.validation), gather(plan.test)};
}

ZeroFewPartition PartitionZeroFew(const std::vector<StanceExample>& test,
                                  const std::set<std::string>& train_targets) {
  ZeroFewPartition partition;
  for (const auto& e : test) {
    if (train_targets.contains(e.target)) {
      partition.few_shot.push_back(e);
    } else {
      partition.zero_shot.push_back(e);
    }
  }
  return partition;
}

ZeroFewPartition PartitionByPublishedMarker(
    const std::vector<StanceExample>& test,
    const std::set<std::string>& train_targets) {
  ZeroFewPartition partition;
  for (const auto& e : test) {
    bool seen = e.seen.value_or(train_targets.contains(e.target));
    (seen ? partition.few_shot : partition.zero_shot).push_back(e);
  }
  return partition;
}

std::map<std::string, std::size_t> TargetCounts(
    const std::vector<StanceExample>& examples) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : examples) ++counts[e.target];
  return counts;
}

std::set<std::string> TargetSet(const std::vector<StanceExample>& examples) {
  std::set<std::string> targets;
  for (const auto& e : examples) targets.insert(e.target);
  return targets;
}

}  // namespace wsbert
