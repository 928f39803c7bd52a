#pragma once

// Plain-text matrix and point-cloud files. One row per line, whitespace
// separated; lines starting with '#' are comments (the point-cloud header
// lives there).

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "procrustes/error.hpp"
#include "procrustes/geodata.hpp"
#include "procrustes/spd_core.hpp"

namespace procrustes::io {

inline Matrix parse_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, "not a number: '" + tok + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::DimensionMismatch, "ragged rows in matrix file");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::ConfigError, "empty matrix file");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open " + path);
  return parse_matrix(in);
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_rows(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

/// `# torus d=<dim> R=<R> r=<r[,r2]> seed=<seed>` with effective radii.
inline std::string cloud_header(const PointCloud& cloud) {
  std::string h = "# torus";
  if (!cloud.params) return h + " d=0 seed=" + std::to_string(cloud.seed);
  const auto r = cloud.params->effective_radii();
  h += " d=" + std::to_string(cloud.params->intrinsic_dim);
  h += " R=" + format_double(r[0]);
  h += " r=" + format_double(r[1]);
  for (std::size_t i = 2; i < r.size(); ++i) h += "," + format_double(r[i]);
  h += " seed=" + std::to_string(cloud.seed);
  return h;
}

inline void write_point_cloud(std::ostream& out, const PointCloud& cloud) {
  out << cloud_header(cloud) << '\n';
  write_rows(out, cloud.points);
}

/// Points only; the header is informational.
inline PointCloud read_point_cloud(const std::string& path) {
  PointCloud cloud;
  cloud.points = read_matrix(path);
  return cloud;
}

}  // namespace procrustes::io
