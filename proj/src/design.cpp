#include "bayesics/design.hpp"

#include <cmath>
#include <set>

#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

std::size_t DesignSpec::term_index(const std::string& name) const {
  for (std::size_t i = 0; i < terms.size(); ++i)
    if (terms[i].name == name) return i;
  throw UserError("variable '" + name + "' is not in the model");
}

DesignSpec build_design(const Formula& formula, const Dataset& data) {
  const std::vector<std::string> terms = expand_terms(formula, data.names);

  std::vector<std::size_t> used_cols;
  for (const auto& r : formula.response_names()) used_cols.push_back(data.column_index(r));
  for (const auto& t : terms) used_cols.push_back(data.column_index(t));
  {
    std::set<std::size_t> uniq(used_cols.begin(), used_cols.end());
    if (uniq.size() != used_cols.size())
      throw UserError("a variable appears more than once across response and terms");
  }

  DesignSpec spec;
  for (std::size_t r = 0; r < data.n_rows; ++r) {
    if (data.row_missing(r, used_cols))
      ++spec.n_dropped_missing;
    else
      spec.kept_rows.push_back(r);
  }
  const std::size_t n = spec.kept_rows.size();
  if (n == 0) throw UserError("no usable rows after dropping missing values");

  // response
  if (formula.is_survival()) {
    spec.is_survival = true;
    const auto& tcol = data.columns[data.column_index(formula.surv_response->time)];
    const auto& ecol = data.columns[data.column_index(formula.surv_response->event)];
    if (!std::holds_alternative<NumericColumn>(tcol) ||
        !std::holds_alternative<NumericColumn>(ecol))
      throw UserError("survival time and event variables must be numeric");
    spec.surv_time.resize(n);
    spec.surv_event.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      spec.surv_time[i] = std::get<NumericColumn>(tcol).values[spec.kept_rows[i]];
      const double e = std::get<NumericColumn>(ecol).values[spec.kept_rows[i]];
      if (e != 0.0 && e != 1.0)
        throw UserError("event indicator must be 0 or 1");
      spec.surv_event[i] = e;
    }
  } else {
    spec.response_name = *formula.response;
    const auto& col = data.columns[data.column_index(*formula.response)];
    spec.y.resize(n);
    if (std::holds_alternative<NumericColumn>(col)) {
      for (std::size_t i = 0; i < n; ++i)
        spec.y[i] = std::get<NumericColumn>(col).values[spec.kept_rows[i]];
    } else {
      // two-level categorical response: encode second level as 1
      const auto& cat = std::get<CategoricalColumn>(col);
      if (cat.levels.size() != 2)
        throw UserError("categorical response '" + *formula.response +
                        "' must have exactly 2 levels, found " +
                        std::to_string(cat.levels.size()));
      spec.response_levels = cat.levels;
      for (std::size_t i = 0; i < n; ++i)
        spec.y[i] = cat.codes[spec.kept_rows[i]] == 1 ? 1.0 : 0.0;
    }
  }

  // design columns
  std::vector<Eigen::VectorXd> cols;
  if (formula.has_intercept) {
    cols.push_back(Eigen::VectorXd::Ones(n));
    spec.labels.push_back("(Intercept)");
    spec.kinds.push_back(ColumnKind::intercept);
    spec.column_sd.push_back(1.0);
  }

  for (const auto& term : terms) {
    const auto& col = data.columns[data.column_index(term)];
    TermInfo info;
    info.name = term;
    if (std::holds_alternative<NumericColumn>(col)) {
      Eigen::VectorXd v(n);
      for (std::size_t i = 0; i < n; ++i)
        v[i] = std::get<NumericColumn>(col).values[spec.kept_rows[i]];
      const double sd =
          n >= 2 ? sample_sd(std::span<const double>(v.data(), v.size())) : 0.0;
      if (!(sd > 0))
        throw UserError("numeric column '" + term + "' is constant");
      info.columns.push_back(cols.size());
      cols.push_back(std::move(v));
      spec.labels.push_back(term);
      spec.kinds.push_back(ColumnKind::numeric);
      spec.column_sd.push_back(sd);
    } else {
      const auto& cat = std::get<CategoricalColumn>(col);
      // levels actually observed among kept rows, in sorted level order
      std::set<int> observed;
      for (std::size_t i = 0; i < n; ++i) observed.insert(cat.codes[spec.kept_rows[i]]);
      std::vector<int> lv(observed.begin(), observed.end());
      if (lv.size() < 2)
        throw UserError("factor '" + term + "' has fewer than 2 observed levels");
      info.is_factor = true;
      for (int code : lv) info.levels.push_back(cat.levels[code]);
      info.reference_level = info.levels.front();
      for (std::size_t k = 1; k < lv.size(); ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < n; ++i)
          if (cat.codes[spec.kept_rows[i]] == lv[k]) v[i] = 1.0;
        info.columns.push_back(cols.size());
        cols.push_back(std::move(v));
        spec.labels.push_back(term + info.levels[k]);
        spec.kinds.push_back(ColumnKind::factor_contrast);
        spec.column_sd.push_back(1.0);
      }
    }
    spec.terms.push_back(std::move(info));
  }

  if (cols.empty())
    throw UserError("empty model: no intercept and no terms");

  spec.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    spec.X.col(static_cast<Eigen::Index>(j)) = cols[j];

  return spec;
}

}  // namespace bayesics
