#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cbem/em.hpp"
#include "cbem/errors.hpp"

namespace cbem {

/// All files are written atomically: the content goes to a sibling temp file
/// first and is renamed into place, so readers never observe partial output.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ParseError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Binary matrix dump: one JSON header line {rows, cols, layout}, a newline,
/// then the entries row-major as little-endian complex128 (re, im doubles).
inline void save_matrix(const std::filesystem::path& path,
                        const Eigen::MatrixXcd& m) {
  nlohmann::json header = {{"rows", m.rows()},
                           {"cols", m.cols()},
                           {"layout", "row-major complex128 little-endian"}};
  std::string content = header.dump();
  content.push_back('\n');
  content.reserve(content.size() + 16 * m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double buf[2] = {m(r, c).real(), m(r, c).imag()};
      content.append(reinterpret_cast<const char*>(buf), sizeof(buf));
    }
  write_file_atomic(path, content);
}

inline Eigen::MatrixXcd load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open matrix file: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("matrix file missing header: " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad matrix header in " + path.string() + ": " +
                     e.what());
  }
  if (!header.contains("rows") || !header.contains("cols"))
    throw ParseError("matrix header lacks rows/cols: " + path.string());
  const Eigen::Index rows = header["rows"].get<Eigen::Index>();
  const Eigen::Index cols = header["cols"].get<Eigen::Index>();
  if (rows < 0 || cols < 0)
    throw ParseError("negative matrix dimensions: " + path.string());
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double buf[2];
      in.read(reinterpret_cast<char*>(buf), sizeof(buf));
      if (!in) throw ParseError("truncated matrix data: " + path.string());
      m(r, c) = cplx(buf[0], buf[1]);
    }
  return m;
}

/// Numeric CSV cell; -infinity is encoded as the sentinel "-inf".
inline std::string csv_number(double x) {
  if (x == -std::numeric_limits<double>::infinity()) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

/// Header row plus string-valued records, written atomically.
inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  if (header.empty()) throw InvalidParam("write_csv: empty header");
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw DimensionMismatch("write_csv: row width != header width");
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << row[i];
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

}  // namespace cbem
