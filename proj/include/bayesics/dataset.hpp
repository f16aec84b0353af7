#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bayesics {

/// Numeric column; missing cells are NaN.
struct NumericColumn {
  std::vector<double> values;
};

/// Categorical column: per-row level index into `levels` (-1 = missing).
/// Levels are the sorted distinct observed values unless supplied.
struct CategoricalColumn {
  std::vector<int> codes;
  std::vector<std::string> levels;
};

using Column = std::variant<NumericColumn, CategoricalColumn>;

struct Dataset {
  std::vector<std::string> names;
  std::vector<Column> columns;
  std::size_t n_rows = 0;

  std::size_t column_index(const std::string& name) const;  // throws UserError
  bool has_column(const std::string& name) const;
  bool is_numeric(std::size_t col) const;
  bool row_missing(std::size_t row, const std::vector<std::size_t>& cols) const;
};

enum class TypeHint { automatic, numeric, categorical };

/// Reads an RFC-4180 CSV with a header row. Columns where every non-missing
/// cell parses as a decimal number become numeric; everything else becomes
/// categorical. Empty cells and the literal "NA" are treated as missing.
Dataset read_csv(const std::string& path,
                 const std::vector<std::pair<std::string, TypeHint>>& hints = {});

Dataset read_csv_stream(std::istream& in, const std::string& origin,
                        const std::vector<std::pair<std::string, TypeHint>>& hints = {});

}  // namespace bayesics
