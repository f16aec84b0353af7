#include "bayesics/formula.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "bayesics/error.hpp"

namespace bayesics {

std::vector<std::string> Formula::response_names() const {
  if (surv_response) return {surv_response->time, surv_response->event};
  if (response) return {*response};
  return {};
}

namespace {

struct Lexer {
  const std::string& text;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eof() {
    skip_space();
    return pos >= text.size();
  }

  char peek() {
    skip_space();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool accept(char c) {
    skip_space();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) fail(std::string("expected '") + c + "' (" + what + ")");
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw UserError("formula syntax error at position " + std::to_string(pos) + ": " + msg);
  }

  std::string ident() {
    skip_space();
    const std::size_t start = pos;
    while (pos < text.size()) {
      const char c = text[pos];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        ++pos;
      } else {
        break;
      }
    }
    if (pos == start) fail("expected identifier");
    return text.substr(start, pos - start);
  }
};

// Things the grammar rejects on purpose, with pointed messages.
void reject_unsupported(Lexer& lex, char c) {
  if (c == '*' || c == ':')
    lex.fail("interactions are not supported; use main effects only");
  if (c == '(')
    lex.fail("transformations/nesting are not supported in formulas");
  lex.fail(std::string("unexpected character '") + c + "'");
}

}  // namespace

Formula parse_formula(const std::string& text) {
  Lexer lex{text};
  Formula f;

  if (lex.eof()) lex.fail("empty formula");
  std::string first = lex.ident();
  if (first == "Surv" && lex.peek() == '(') {
    lex.expect('(', "Surv response");
    SurvResponse sr;
    sr.time = lex.ident();
    lex.expect(',', "Surv response");
    sr.event = lex.ident();
    lex.expect(')', "Surv response");
    if (sr.time == sr.event)
      lex.fail("Surv time and event variables must differ");
    f.surv_response = sr;
  } else {
    f.response = first;
  }

  lex.expect('~', "formula separator");

  if (lex.accept('1')) {
    if (!lex.eof()) lex.fail("'~ 1' admits no further terms");
    return f;
  }
  if (lex.accept('.')) {
    if (!lex.eof()) lex.fail("'.' admits no further terms");
    f.wildcard = true;
    return f;
  }

  const auto responses = f.response_names();
  std::set<std::string> seen;
  while (true) {
    if (lex.eof()) lex.fail("expected term");
    const char c = lex.peek();
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.')
      reject_unsupported(lex, c);
    const std::string term = lex.ident();
    if (std::find(responses.begin(), responses.end(), term) != responses.end())
      throw UserError("response variable '" + term + "' repeated on the right-hand side");
    if (!seen.insert(term).second)
      throw UserError("duplicate term '" + term + "' in formula");
    f.terms.push_back(term);
    if (lex.eof()) break;
    if (!lex.accept('+')) reject_unsupported(lex, lex.peek());
  }
  return f;
}

std::string to_string(const Formula& f) {
  std::string out;
  if (f.surv_response)
    out = "Surv(" + f.surv_response->time + "," + f.surv_response->event + ")";
  else
    out = *f.response;
  out += " ~ ";
  if (f.wildcard) {
    out += ".";
  } else if (f.terms.empty()) {
    out += "1";
  } else {
    for (std::size_t i = 0; i < f.terms.size(); ++i) {
      if (i) out += " + ";
      out += f.terms[i];
    }
  }
  return out;
}

std::vector<std::string> expand_terms(const Formula& f,
                                      const std::vector<std::string>& dataset_columns) {
  if (!f.wildcard) return f.terms;
  const auto responses = f.response_names();
  std::vector<std::string> out;
  for (const auto& name : dataset_columns)
    if (std::find(responses.begin(), responses.end(), name) == responses.end())
      out.push_back(name);
  return out;
}

}  // namespace bayesics
