#include "bayesics/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "bayesics/error.hpp"

namespace bayesics {

std::size_t Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw UserError("no such column: '" + name + "'");
}

bool Dataset::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool Dataset::is_numeric(std::size_t col) const {
  return std::holds_alternative<NumericColumn>(columns.at(col));
}

bool Dataset::row_missing(std::size_t row, const std::vector<std::size_t>& cols) const {
  for (std::size_t c : cols) {
    if (is_numeric(c)) {
      if (std::isnan(std::get<NumericColumn>(columns[c]).values[row])) return true;
    } else {
      if (std::get<CategoricalColumn>(columns[c]).codes[row] < 0) return true;
    }
  }
  return false;
}

namespace {

// RFC 4180 record reader; handles quoted fields with embedded commas,
// escaped quotes, and newlines. Returns false at end of stream.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int ch = in.get();
  if (ch == EOF) return false;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  while (true) {
    if (ch == EOF) {
      fields.push_back(field);
      return true;
    }
    any = true;
    if (in_quotes) {
      if (ch == '"') {
        const int next = in.peek();
        if (next == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(static_cast<char>(ch));
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(field);
      return true;
    } else if (ch == '\n') {
      fields.push_back(field);
      return true;
    } else {
      field.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  (void)any;
}

bool is_missing_cell(const std::string& s) { return s.empty() || s == "NA"; }

std::optional<double> parse_number(const std::string& s) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) return std::nullopt;
  double value = 0;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return value;
}

}  // namespace

Dataset read_csv_stream(std::istream& in, const std::string& origin,
                        const std::vector<std::pair<std::string, TypeHint>>& hints) {
  std::vector<std::string> header;
  if (!read_record(in, header) || (header.size() == 1 && header[0].empty()))
    throw UserError(origin + ": empty file");

  std::set<std::string> seen;
  for (const auto& name : header)
    if (!seen.insert(name).second)
      throw UserError(origin + ": duplicate column name '" + name + "'");

  std::vector<std::vector<std::string>> cells(header.size());
  std::vector<std::string> record;
  std::size_t row = 0;
  while (read_record(in, record)) {
    if (record.size() == 1 && record[0].empty()) continue;  // blank line
    ++row;
    if (record.size() != header.size())
      throw UserError(origin + ": ragged row " + std::to_string(row) + " (got " +
                      std::to_string(record.size()) + " fields, expected " +
                      std::to_string(header.size()) + ")");
    for (std::size_t c = 0; c < header.size(); ++c) cells[c].push_back(record[c]);
  }

  auto hint_for = [&](const std::string& name) {
    for (const auto& [n, h] : hints)
      if (n == name) return h;
    return TypeHint::automatic;
  };

  Dataset ds;
  ds.names = header;
  ds.n_rows = row;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const TypeHint hint = hint_for(header[c]);
    bool numeric = hint != TypeHint::categorical;
    if (numeric) {
      for (const auto& cell : cells[c]) {
        if (is_missing_cell(cell)) continue;
        if (!parse_number(cell)) {
          if (hint == TypeHint::numeric)
            throw UserError(origin + ": column '" + header[c] +
                            "' declared numeric but cell '" + cell + "' does not parse");
          numeric = false;
          break;
        }
      }
    }
    if (numeric) {
      NumericColumn col;
      col.values.reserve(row);
      for (const auto& cell : cells[c]) {
        const auto v = is_missing_cell(cell) ? std::nullopt : parse_number(cell);
        col.values.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
      }
      ds.columns.emplace_back(std::move(col));
    } else {
      CategoricalColumn col;
      std::set<std::string> levels;
      for (const auto& cell : cells[c])
        if (!is_missing_cell(cell)) levels.insert(cell);
      col.levels.assign(levels.begin(), levels.end());
      std::map<std::string, int> code;
      for (std::size_t i = 0; i < col.levels.size(); ++i)
        code[col.levels[i]] = static_cast<int>(i);
      col.codes.reserve(row);
      for (const auto& cell : cells[c])
        col.codes.push_back(is_missing_cell(cell) ? -1 : code[cell]);
      ds.columns.emplace_back(std::move(col));
    }
  }
  return ds;
}

Dataset read_csv(const std::string& path,
                 const std::vector<std::pair<std::string, TypeHint>>& hints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open '" + path + "'");
  return read_csv_stream(in, path, hints);
}

}  // namespace bayesics
