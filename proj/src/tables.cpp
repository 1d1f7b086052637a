#include "wsbert/tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "wsbert/error.hpp"

namespace wsbert {

namespace {

std::string FormatScore(std::optional<double> score) {
  if (!score) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", RoundOneDecimal(*score));
  return buf;
}

// Display width in code points, so arrows and other UTF-8 text align.
std::size_t DisplayWidth(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string Pad(const std::string& s, std::size_t width, bool left) {
  std::size_t w = DisplayWidth(s);
  std::string fill(width > w ? width - w : 0, ' ');
  return left ? s + fill : fill + s;
}

std::string Render(const std::vector<std::vector<std::string>>& grid) {
  std::vector<std::size_t> widths;
  for (const auto& row : grid) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], DisplayWidth(row[c]));
    }
  }
  std::string out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      if (c > 0) out += "  ";
      out += Pad(grid[r][c], widths[c], c == 0);
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      total += 2 * (widths.empty() ? 0 : widths.size() - 1);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace

double RoundOneDecimal(double value) {
  return std::floor(value * 10.0 + 0.5 + 1e-9) / 10.0;
}

TableCell CellFromReport(const std::string& column, const EvalReport& report) {
  if (report.absent) {
    throw Error(ErrorCode::kInconsistentReports,
                "report for '" + column + "' has no examples");
  }
  return {column, 100.0 * report.f_avg, report.arity};
}

ResultTable EmitTable(const std::vector<TableRow>& rows, bool with_average) {
  if (rows.empty()) {
    throw Error(ErrorCode::kInconsistentReports, "no rows to tabulate");
  }
  ResultTable table;
  table.with_average = with_average;
  std::optional<int> arity;
  for (const auto& row : rows) {
    std::set<std::string> seen;
    for (const auto& cell : row.cells) {
      if (arity && *arity != cell.arity) {
        throw Error(ErrorCode::kInconsistentReports,
                    "cells mix label arities " + std::to_string(*arity) +
                        " and " + std::to_string(cell.arity));
      }
      arity = cell.arity;
      if (!seen.insert(cell.column).second) {
        throw Error(ErrorCode::kInconsistentReports,
                    "method '" + row.method + "' repeats column '" +
                        cell.column + "'");
      }
      if (std::find(table.columns.begin(), table.columns.end(), cell.column) ==
          table.columns.end()) {
        table.columns.push_back(cell.column);
      }
    }
  }
  for (const auto& row : rows) {
    if (row.cells.empty()) {
      throw Error(ErrorCode::kInconsistentReports,
                  "method '" + row.method + "' has no cells");
    }
    table.methods.push_back(row.method);
    std::vector<std::optional<double>> scores(table.columns.size());
    double sum = 0.0;
    for (const auto& cell : row.cells) {
      auto it = std::find(table.columns.begin(), table.columns.end(), cell.column);
      scores[static_cast<std::size_t>(it - table.columns.begin())] = cell.score;
      sum += cell.score;
    }
    table.scores.push_back(std::move(scores));
    table.averages.push_back(sum / static_cast<double>(row.cells.size()));
  }
  return table;
}

std::string ResultTable::Format(TableLayout layout) const {
  std::vector<std::vector<std::string>> grid;
  if (layout == TableLayout::kMethodsAsRows) {
    std::vector<std::string> header = {"Method"};
    header.insert(header.end(), columns.begin(), columns.end());
    if (with_average) header.push_back("Avg.");
    grid.push_back(header);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::vector<std::string> line = {methods[m]};
      for (const auto& s : scores[m]) line.push_back(FormatScore(s));
      if (with_average) line.push_back(FormatScore(averages[m]));
      grid.push_back(line);
    }
  } else {
    std::vector<std::string> header = {"Target"};
    header.insert(header.end(), methods.begin(), methods.end());
    grid.push_back(header);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::vector<std::string> line = {columns[c]};
      for (std::size_t m = 0; m < methods.size(); ++m) {
        line.push_back(FormatScore(scores[m][c]));
      }
      grid.push_back(line);
    }
    if (with_average) {
      std::vector<std::string> line = {"Avg."};
      for (double a : averages) line.push_back(FormatScore(a));
      grid.push_back(line);
    }
  }
  return Render(grid);
}

nlohmann::json ResultTable::ToJson() const {
  nlohmann::json j;
  j["columns"] = columns;
  j["rows"] = nlohmann::json::array();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    nlohmann::json row;
    row["method"] = methods[m];
    nlohmann::json cells = nlohmann::json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      cells[columns[c]] = scores[m][c] ? nlohmann::json(*scores[m][c])
                                       : nlohmann::json(nullptr);
    }
    row["cells"] = cells;
    if (with_average) {
      row["avg"] = averages[m];
      row["avg_rounded"] = RoundOneDecimal(averages[m]);
    }
    j["rows"].push_back(row);
  }
  return j;
}

}  // namespace wsbert
