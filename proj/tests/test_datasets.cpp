#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "test_util.hpp"
#include "wsbert/datasets.hpp"

using namespace wsbert;
using namespace wsbert::testing;

namespace {

std::vector<StanceExample> PStanceFixture() {
  // Trump 8/3/3, Biden 6/2/2, Sanders 4/2/2.
  std::vector<StanceExample> out;
  int n = 0;
  auto add = [&](const std::string& target, Split split, int count) {
    for (int i = 0; i < count; ++i) {
      out.push_back({"id" + std::to_string(n++), "tweet about " + target, target,
                     i % 2 ? StanceLabel::kAgainst : StanceLabel::kFavor, split, std::nullopt});
    }
  };
  for (auto [t, tr, va, te] : {std::tuple{"Trump", 8, 3, 3}, {"Biden", 6, 2, 2}, {"Sanders", 4, 2, 2}}) {
    add(t, Split::kTrain, tr);
    add(t, Split::kValidation, va);
    add(t, Split::kTest, te);
  }
  return out;
}

std::set<std::string> Ids(const std::vector<StanceExample>& xs, const std::string& target,
                          std::optional<Split> split = std::nullopt) {
  std::set<std::string> ids;
  for (const auto& e : xs) {
    if (e.target == target && (!split || e.split == *split)) ids.insert(e.example_id);
  }
  return ids;
}

DatasetSpec WriteFixture(const std::string& name, const std::string& train_body,
                         DatasetName dataset = DatasetName::kPStance) {
  auto dir = TempPath(name);
  std::filesystem::create_directories(dir);
  DatasetSpec spec = DatasetSpec::Defaults(dataset);
  std::ofstream(dir / "train.tsv") << train_body;
  spec.source_files[Split::kTrain] = dir / "train.tsv";
  return spec;
}

}  // namespace

TEST(LoadDataset, ReadsWellFormedRows) {
  DatasetSpec spec = WriteFixture("ds_ok",
                                  "example_id\tdocument\ttarget\tlabel\n"
                                  "a\tI back him\tTrump\tfavor\n"
                                  "b\tno way\tTrump\tAGAINST\n"
                                  "c\tline\\nbreak\tBiden\tfavor\n"
                                  "d\tnope\tBiden\tagainst\n");
  auto xs = LoadDataset(spec);
  ASSERT_EQ(xs.size(), 4u);
  EXPECT_EQ(xs[1].label, StanceLabel::kAgainst);
  EXPECT_EQ(xs[2].document, "line\nbreak");
  EXPECT_EQ(xs[3].split, Split::kTrain);
}

TEST(LoadDataset, NeutralUnderArityTwoIsSchemaMismatch) {
  DatasetSpec spec = WriteFixture("ds_neutral",
                                  "example_id\tdocument\ttarget\tlabel\n"
                                  "a\tmeh\tTrump\tneutral\n");
  try {
    LoadDataset(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(LoadDataset, DuplicateIdIsNamedInReport) {
  DatasetSpec spec = WriteFixture("ds_dup",
                                  "example_id\tdocument\ttarget\tlabel\n"
                                  "x17\tone\tTrump\tfavor\n"
                                  "x17\ttwo\tTrump\tagainst\n"
                                  "y\t\tTrump\tfavor\n");
  LoadReport report = LoadDatasetWithReport(spec);
  ASSERT_EQ(report.issues.size(), 2u);
  EXPECT_NE(report.issues[0].message.find("x17"), std::string::npos);
  EXPECT_EQ(report.examples.size(), 1u);
  try {
    LoadDataset(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("x17"), std::string::npos);
  }
}

TEST(LoadDataset, MissingFileAndColumn) {
  DatasetSpec spec = DatasetSpec::Defaults(DatasetName::kVast);
  spec.source_files[Split::kTrain] = TempPath("nope.tsv");
  EXPECT_THROW(
      {
        try {
          LoadDataset(spec);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
          throw;
        }
      },
      Error);
  DatasetSpec bad = WriteFixture("ds_header", "id\tdocument\ttarget\tlabel\n");
  EXPECT_THROW(LoadDataset(bad), Error);
}

TEST(LoadDataset, AliasesAndSeenColumn) {
  DatasetSpec spec = WriteFixture("ds_alias",
                                  "example_id\tdocument\ttarget\tlabel\tseen\n"
                                  "a\td1\tgun control\t0\t1\n"
                                  "b\td2\tsalt\t2\t0\n",
                                  DatasetName::kVast);
  spec.label_aliases = {{"0", StanceLabel::kAgainst}, {"1", StanceLabel::kFavor},
                        {"2", StanceLabel::kNeutral}};
  auto xs = LoadDataset(spec);
  ASSERT_EQ(xs.size(), 2u);
  EXPECT_EQ(xs[0].label, StanceLabel::kAgainst);
  EXPECT_EQ(xs[1].label, StanceLabel::kNeutral);
  EXPECT_EQ(xs[0].seen, std::optional<bool>(true));
  EXPECT_EQ(xs[1].seen, std::optional<bool>(false));
}

TEST(LoadDataset, WriteThenLoadPreservesExamples) {
  auto xs = PStanceFixture();
  auto dir = TempPath("ds_roundtrip");
  std::filesystem::create_directories(dir);
  DatasetSpec spec = DatasetSpec::Defaults(DatasetName::kPStance);
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    std::vector<StanceExample> part;
    std::copy_if(xs.begin(), xs.end(), std::back_inserter(part),
                 [&](const StanceExample& e) { return e.split == s; });
    auto path = dir / (std::string(SplitName(s)) + ".tsv");
    WriteSplitFile(path, part);
    spec.source_files[s] = path;
  }
  auto loaded = LoadDataset(spec);
  std::sort(loaded.begin(), loaded.end(), [](auto& a, auto& b) { return a.example_id < b.example_id; });
  std::sort(xs.begin(), xs.end(), [](auto& a, auto& b) { return a.example_id < b.example_id; });
  EXPECT_EQ(loaded, xs);
}

TEST(DatasetSpec, DefaultsCarryArity) {
  EXPECT_EQ(DatasetSpec::Defaults(DatasetName::kPStance).label_arity, 2);
  EXPECT_EQ(DatasetSpec::Defaults(DatasetName::kCovid19Stance).label_arity, 3);
  EXPECT_EQ(DatasetSpec::Defaults(DatasetName::kVast).label_arity, 3);
  DatasetSpec bad = DatasetSpec::Defaults(DatasetName::kPStance);
  bad.label_arity = 3;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(BuildSplit, CrossTargetTestIsDestinationUnion) {
  auto xs = PStanceFixture();
  SplitPlan plan = BuildSplit(xs, Protocol::kCrossTarget, "Trump", "Biden");
  EXPECT_EQ(plan.test.size(), 10u);
  std::set<std::string> test(plan.test.begin(), plan.test.end());
  EXPECT_EQ(test, Ids(xs, "Biden"));
  for (const auto& id : Ids(xs, "Trump")) EXPECT_FALSE(test.contains(id));
  EXPECT_EQ(std::set<std::string>(plan.train.begin(), plan.train.end()),
            Ids(xs, "Trump", Split::kTrain));
  EXPECT_EQ(std::set<std::string>(plan.validation.begin(), plan.validation.end()),
            Ids(xs, "Trump", Split::kValidation));
}

TEST(BuildSplit, TargetSpecificKeepsPublishedSplits) {
  auto xs = PStanceFixture();
  SplitPlan plan = BuildSplit(xs, Protocol::kTargetSpecific, "Trump", std::nullopt);
  EXPECT_EQ(std::set<std::string>(plan.train.begin(), plan.train.end()), Ids(xs, "Trump", Split::kTrain));
  EXPECT_EQ(std::set<std::string>(plan.test.begin(), plan.test.end()), Ids(xs, "Trump", Split::kTest));
  EXPECT_EQ(plan.validation.size(), 3u);
}

TEST(BuildSplit, RejectsBadTargets) {
  auto xs = PStanceFixture();
  auto code = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code([&] { BuildSplit(xs, Protocol::kCrossTarget, "Trump", "Trump"); }),
            ErrorCode::kUnknownTarget);
  EXPECT_EQ(code([&] { BuildSplit(xs, Protocol::kTargetSpecific, "Obama", std::nullopt); }),
            ErrorCode::kUnknownTarget);
  EXPECT_EQ(code([&] { BuildSplit(xs, Protocol::kCrossTarget, "Trump", std::nullopt); }),
            ErrorCode::kUnknownTarget);
  auto no_val = xs;
  std::erase_if(no_val, [](const StanceExample& e) {
    return e.target == "Sanders" && e.split == Split::kValidation;
  });
  EXPECT_EQ(code([&] { BuildSplit(no_val, Protocol::kTargetSpecific, "Sanders", std::nullopt); }),
            ErrorCode::kEmptySplit);
}

TEST(BuildSplit, SplitsAreDisjointAndManifestRoundTrips) {
  auto xs = PStanceFixture();
  for (auto protocol : {Protocol::kTargetSpecific, Protocol::kZeroFewShot}) {
    SplitPlan plan = protocol == Protocol::kTargetSpecific
                         ? BuildSplit(xs, protocol, "Biden", std::nullopt)
                         : BuildSplit(xs, protocol, std::nullopt, std::nullopt);
    std::set<std::string> all;
    for (const auto* part : {&plan.train, &plan.validation, &plan.test}) {
      for (const auto& id : *part) EXPECT_TRUE(all.insert(id).second) << id;
    }
    SplitPlan back = SplitPlan::FromManifest(plan.ToManifest());
    EXPECT_EQ(back.train, plan.train);
    EXPECT_EQ(back.test, plan.test);
    EXPECT_EQ(back.protocol, plan.protocol);
  }
}

TEST(BuildSplit, MaterializePreservesLabels) {
  auto xs = PStanceFixture();
  SplitData data = Materialize(BuildSplit(xs, Protocol::kTargetSpecific, "Trump", std::nullopt), xs);
  int favor = 0;
  for (const auto& e : data.train) favor += e.label == StanceLabel::kFavor;
  EXPECT_EQ(favor, 4);
  EXPECT_EQ(data.train.size(), 8u);
}

TEST(PartitionZeroFew, SetMembership) {
  std::vector<StanceExample> test = {
      {"1", "d", "a", StanceLabel::kFavor, Split::kTest, {}},
      {"2", "d", "b", StanceLabel::kFavor, Split::kTest, {}}};
  auto p = PartitionZeroFew(test, {"b"});
  ASSERT_EQ(p.zero_shot.size(), 1u);
  EXPECT_EQ(p.zero_shot[0].target, "a");
  EXPECT_EQ(p.few_shot[0].target, "b");
  EXPECT_TRUE(PartitionZeroFew(test, {"a", "b", "c"}).zero_shot.empty());
}

TEST(PartitionZeroFew, CountsAndPermutationStability) {
  std::vector<StanceExample> test;
  for (int i = 0; i < 10; ++i) {
    test.push_back({std::to_string(i), "d", i < 3 ? "unseen" + std::to_string(i) : "seen",
                    StanceLabel::kNeutral, Split::kTest, {}});
  }
  auto p = PartitionZeroFew(test, {"seen"});
  EXPECT_EQ(p.zero_shot.size(), 3u);
  EXPECT_EQ(p.few_shot.size(), 7u);
  auto ids = [](const std::vector<StanceExample>& xs) {
    std::set<std::string> s;
    for (const auto& e : xs) s.insert(e.example_id);
    return s;
  };
  std::mt19937 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = test;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto q = PartitionZeroFew(shuffled, {"seen"});
    EXPECT_EQ(ids(q.zero_shot), ids(p.zero_shot));
    EXPECT_EQ(ids(q.few_shot), ids(p.few_shot));
  }
}

TEST(PartitionZeroFew, PublishedMarkerWins) {
  std::vector<StanceExample> test = {
      {"1", "d", "a", StanceLabel::kFavor, Split::kTest, true},
      {"2", "d", "b", StanceLabel::kFavor, Split::kTest, false},
      {"3", "d", "c", StanceLabel::kFavor, Split::kTest, std::nullopt}};
  auto p = PartitionByPublishedMarker(test, {"b"});
  ASSERT_EQ(p.zero_shot.size(), 2u);
  EXPECT_EQ(p.zero_shot[0].example_id, "2");
  EXPECT_EQ(p.zero_shot[1].example_id, "3");
  EXPECT_EQ(p.few_shot[0].example_id, "1");
}
