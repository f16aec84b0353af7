#pragma once

#include <stdexcept>
#include <string>

namespace bayesics {

/// Invalid user input: bad formula, malformed CSV, out-of-range option.
class UserError : public std::runtime_error {
 public:
  explicit UserError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: rank deficiency, non-convergence, degenerate estimate.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bayesics
