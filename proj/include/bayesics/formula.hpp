#pragma once

#include <optional>
#include <string>
#include <vector>

namespace bayesics {

// Model-formula mini-language:
//   formula  := response "~" rhs
//   response := ident | "Surv" "(" ident "," ident ")"
//   rhs      := "1" | "." | term ("+" term)*
//   term     := ident
// Interactions, transformations and nesting are not supported.

struct SurvResponse {
  std::string time;
  std::string event;

  bool operator==(const SurvResponse&) const = default;
};

struct Formula {
  std::optional<std::string> response;       // single-variable response
  std::optional<SurvResponse> surv_response; // or survival pair
  std::vector<std::string> terms;            // empty + !wildcard => intercept-only
  bool wildcard = false;                     // "." on the RHS
  bool has_intercept = true;

  bool is_survival() const { return surv_response.has_value(); }
  std::vector<std::string> response_names() const;

  bool operator==(const Formula&) const = default;
};

Formula parse_formula(const std::string& text);
std::string to_string(const Formula& f);

/// Expands a wildcard RHS to all non-response columns in dataset order.
/// Returns f.terms unchanged when there is no wildcard.
std::vector<std::string> expand_terms(const Formula& f,
                                      const std::vector<std::string>& dataset_columns);

}  // namespace bayesics
