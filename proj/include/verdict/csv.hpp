#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "verdict/error.hpp"

namespace verdict {
namespace csv {

// Strict comma-separated reader: UTF-8, '\n' rows ('\r\n' tolerated),
// double-quote escaping. Lines starting with '#' are metadata comments and
// are skipped (outputs carry seeds that way).
inline std::vector<std::vector<std::string>> read(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        if (!field.empty())
          throw Error(ErrorKind::kMalformedCsv,
                      "line " + std::to_string(line_no) +
                          ": quote in the middle of an unquoted field");
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    if (quoted)
      throw Error(ErrorKind::kMalformedCsv,
                  "line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(field));
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline void write_field(std::ostream& out, const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quote) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

inline void write_row(std::ostream& out,
                      const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

}  // namespace csv
}  // namespace verdict
