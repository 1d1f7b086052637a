#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsbert/evaluation.hpp"

namespace wsbert {

// One score in percent (0-100), e.g. 100 * f_avg of a report.
struct TableCell {
  std::string column;
  double score = 0.0;
  int arity = 3;
};

struct TableRow {
  std::string method;
  std::vector<TableCell> cells;
};

enum class TableLayout {
  kMethodsAsRows,     // targets across, one row per method
  kMethodsAsColumns,  // one row per target or pair, methods across
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::string> methods;
  // scores[method][column]; std::nullopt where a method lacks a column.
  std::vector<std::vector<std::optional<double>>> scores;
  // Unweighted mean of each method's cells at full precision.
  std::vector<double> averages;
  bool with_average = true;

  std::string Format(TableLayout layout = TableLayout::kMethodsAsRows) const;
  nlohmann::json ToJson() const;
};

// Half-up rounding to one decimal, tolerant of binary representation error
// (84.35 rounds to 84.4).
double RoundOneDecimal(double value);

TableCell CellFromReport(const std::string& column, const EvalReport& report);

// Columns keep first-seen order. Throws Error(kInconsistentReports) when
// arities differ, a row repeats a column, or the input is empty.
ResultTable EmitTable(const std::vector<TableRow>& rows, bool with_average = true);

}  // namespace wsbert
