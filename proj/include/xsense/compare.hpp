#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xsense/experiment.hpp"

namespace xsense {

/// Pooled micro-F1 by (test sensor x variant). Rows follow the first
/// appearance of each sensor; columns follow the canonical variant order.
struct ComparisonTable {
  std::vector<std::string> sensors;
  std::vector<Variant> variants;
  /// cells[row][col]; empty where no report covers the cell.
  std::vector<std::vector<std::optional<double>>> cells;
  /// Column of the best score per row; ties go to the earlier column.
  std::vector<std::size_t> best;

  /// Difference to the row's Trad score in percentage points, if both exist.
  std::optional<double> delta_pp(std::size_t row, std::size_t col) const;

  std::string to_csv() const;
  std::string to_text() const;
};

/// Errors if the reports disagree on dataset or window spec, or if two
/// reports cover the same cell.
ComparisonTable compare_runs(const std::vector<RunReport>& reports);

}  // namespace xsense
