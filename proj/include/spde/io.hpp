#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spde/errors.hpp"
#include "spde/linalg.hpp"

namespace spde {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void append_csv_row(std::ostream& os, const double* row,
                           Eigen::Index n) {
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j) os << ',';
    os << format_double(row[j]);
  }
  os << '\n';
}

inline void write_matrix_csv(std::ostream& os, const Matrix& m) {
  Eigen::VectorXd row(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    row = m.row(i);
    append_csv_row(os, row.data(), row.size());
  }
}

inline std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    double v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc())
      throw IoError("failed to parse numeric CSV field: " + line);
    out.push_back(v);
    p = next;
    if (p < end && *p == ',') ++p;
  }
  return out;
}

inline Matrix read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_csv_row(line));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw IoError("ragged CSV matrix");
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw IoError("expected JSON array of rows");
  const size_t r = j.size();
  if (r == 0) return Matrix(0, 0);
  const size_t c = j[0].size();
  Matrix m(r, c);
  for (size_t i = 0; i < r; ++i) {
    if (j[i].size() != c) throw IoError("ragged JSON matrix");
    for (size_t k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace spde
