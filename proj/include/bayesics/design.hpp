#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "bayesics/dataset.hpp"
#include "bayesics/formula.hpp"

namespace bayesics {

enum class ColumnKind { intercept, numeric, factor_contrast };

/// One right-hand-side variable and the design columns it produced.
struct TermInfo {
  std::string name;
  bool is_factor = false;
  std::vector<std::size_t> columns;       // indices into X
  std::vector<std::string> levels;        // factors only
  std::string reference_level;            // factors only (first level)
};

struct DesignSpec {
  Eigen::MatrixXd X;                       // n x p
  std::vector<std::string> labels;         // p column labels
  std::vector<ColumnKind> kinds;           // p
  std::vector<double> column_sd;           // p; sample SD for numeric, 1 otherwise
  std::vector<TermInfo> terms;

  Eigen::VectorXd y;                       // numeric or 0/1-encoded response
  std::vector<std::string> response_levels;  // set when response was categorical
  std::optional<std::string> response_name;

  // survival responses
  Eigen::VectorXd surv_time;
  Eigen::VectorXd surv_event;
  bool is_survival = false;

  std::size_t n_dropped_missing = 0;       // listwise-deleted rows
  std::vector<std::size_t> kept_rows;      // original row indices kept

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  bool has_intercept() const {
    return !kinds.empty() && kinds.front() == ColumnKind::intercept;
  }
  std::size_t term_index(const std::string& name) const;  // throws UserError
};

/// Builds the factor-coded design matrix: treatment contrasts against the
/// first (sorted) level, intercept column of ones first when present,
/// listwise deletion of rows missing any used variable. Column labels
/// concatenate variable and level, e.g. "gender2_male".
DesignSpec build_design(const Formula& formula, const Dataset& data);

}  // namespace bayesics
