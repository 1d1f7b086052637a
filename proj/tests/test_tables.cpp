#include <gtest/gtest.h>

#include "wsbert/error.hpp"
#include "wsbert/tables.hpp"

using namespace wsbert;

namespace {

TableRow Row(const std::string& method, std::vector<std::pair<std::string, double>> cells,
             int arity) {
  TableRow row{method, {}};
  for (auto& [c, s] : cells) row.cells.push_back({c, s, arity});
  return row;
}

}  // namespace

TEST(EmitTable, TargetSpecificAverage) {
  auto t = EmitTable({Row("WS-BERT-Dual", {{"Trump", 85.8}, {"Biden", 83.5}, {"Sanders", 79.0}}, 2)});
  EXPECT_DOUBLE_EQ(RoundOneDecimal(t.averages[0]), 82.8);
  std::string text = t.Format();
  EXPECT_NE(text.find("82.8"), std::string::npos);
  EXPECT_NE(text.find("Avg."), std::string::npos);
}

TEST(EmitTable, HalfUpRoundingOfAverage) {
  auto t = EmitTable({Row("m", {{"a", 84.3}, {"b", 84.4}}, 3)});
  EXPECT_DOUBLE_EQ(RoundOneDecimal(t.averages[0]), 84.4);
  EXPECT_DOUBLE_EQ(RoundOneDecimal(84.35), 84.4);
  EXPECT_DOUBLE_EQ(RoundOneDecimal(84.34999), 84.3);
}

TEST(EmitTable, CrossTargetAverage) {
  auto t = EmitTable({Row("WS-BERT-D", {{"Trump→Biden", 68.3}, {"Trump→Sanders", 64.4},
                                         {"Biden→Trump", 67.7}, {"Biden→Sanders", 69.0},
                                         {"Sanders→Trump", 63.6}, {"Sanders→Biden", 76.8}}, 2)});
  EXPECT_NEAR(RoundOneDecimal(t.averages[0]), 68.3, 0.05);
  std::string text = t.Format(TableLayout::kMethodsAsColumns);
  EXPECT_NE(text.find("Trump→Biden"), std::string::npos);
}

TEST(EmitTable, SingleCell) {
  auto t = EmitTable({Row("m", {{"Overall", 74.5}}, 3)});
  EXPECT_DOUBLE_EQ(t.averages[0], 74.5);
}

TEST(EmitTable, MissingCellsRenderAsDash) {
  auto t = EmitTable({Row("a", {{"x", 50}, {"y", 60}}, 3), Row("b", {{"y", 70}}, 3)});
  EXPECT_FALSE(t.scores[1][0].has_value());
  EXPECT_NE(t.Format().find(" -"), std::string::npos);
}

TEST(EmitTable, RejectsInconsistentInput) {
  EXPECT_THROW(EmitTable({}), Error);
  EXPECT_THROW(EmitTable({Row("a", {{"x", 50}}, 2), Row("b", {{"x", 50}}, 3)}), Error);
  EXPECT_THROW(EmitTable({Row("a", {{"x", 50}, {"x", 51}}, 2)}), Error);
}

TEST(EmitTable, CovidRowAverage) {
  auto t = EmitTable({Row("WS-BERT-Dual", {{"Fauci", 83.6}, {"Home", 85.0}, {"Mask", 86.6}, {"School", 82.2}}, 3)});
  EXPECT_DOUBLE_EQ(RoundOneDecimal(t.averages[0]), 84.4);
}
