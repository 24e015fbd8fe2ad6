#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace lfn::csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur.push_back('"');
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Shortest text that parses back to the same double.
inline std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError(where + ": trailing characters in '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError(where + ": not a number '" + s + "'");
  } catch (const std::out_of_range&) {
    throw ParseError(where + ": number out of range '" + s + "'");
  }
}

inline std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_line(line));
  }
  return rows;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

// Matrix with a label header row and a label in the first column of each row.
struct LabelledMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;
};

inline LabelledMatrix read_labelled(const std::string& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw ParseError(path + ": empty file");
  LabelledMatrix out;
  out.col_labels.assign(rows.front().begin() + 1, rows.front().end());
  const std::size_t nc = out.col_labels.size();
  out.values = Matrix(rows.size() - 1, nc);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != nc + 1)
      throw ParseError(path + ": row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                       " fields, expected " + std::to_string(nc + 1));
    out.row_labels.push_back(rows[r][0]);
    for (std::size_t c = 0; c < nc; ++c)
      out.values(r - 1, c) = parse_double(rows[r][c + 1], path + ":" + std::to_string(r + 1));
  }
  return out;
}

inline std::string render_labelled(const std::vector<std::string>& row_labels,
                                   const std::vector<std::string>& col_labels, const Matrix& m,
                                   const std::string& corner = "") {
  if (row_labels.size() != m.rows() || col_labels.size() != m.cols())
    throw ShapeMismatch("render_labelled: label count does not match matrix shape");
  std::ostringstream os;
  os << quote(corner);
  for (const auto& l : col_labels) os << ',' << quote(l);
  os << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << quote(row_labels[r]);
    for (std::size_t c = 0; c < m.cols(); ++c) os << ',' << format(m(r, c));
    os << '\n';
  }
  return os.str();
}

inline void write_labelled(const std::string& path, const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels, const Matrix& m,
                           const std::string& corner = "") {
  write_text(path, render_labelled(row_labels, col_labels, m, corner));
}

}  // namespace lfn::csv
