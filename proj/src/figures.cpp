#include "transferlab/figures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "transferlab/errors.hpp"

namespace transferlab {

namespace {

void check_matrix(const std::vector<Vec>& matrix) {
  if (matrix.empty() || matrix.front().empty()) {
    throw InvalidArguments("figure: matrix must be non-empty");
  }
  for (const Vec& row : matrix) {
    if (row.size() != matrix.front().size()) {
      throw DimensionError("figure: ragged matrix");
    }
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  return out;
}

int gray_level(double v) {
  if (!std::isfinite(v)) return 0;
  return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_pgm(const std::vector<std::vector<int>>& levels, const std::string& path) {
  auto out = open_out(path);
  const std::size_t height = levels.size();
  const std::size_t width = levels.front().size();
  out << "P5\n" << width << ' ' << height << "\n255\n";
  for (const auto& row : levels) {
    for (int v : row) out.put(static_cast<char>(v));
  }
  if (!out) throw FormatError(path + ": write failed");
}

void write_svg(const std::vector<std::vector<int>>& levels, const std::string& path) {
  auto out = open_out(path);
  const std::size_t height = levels.size();
  const std::size_t width = levels.front().size();
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const int g = levels[r][c];
      out << "<rect x=\"" << c << "\" y=\"" << r << "\" width=\"1\" height=\"1\" fill=\"rgb(" << g
          << ',' << g << ',' << g << ")\"/>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw FormatError(path + ": write failed");
}

}  // namespace

void write_matrix_csv(const std::vector<Vec>& matrix, const std::string& path) {
  check_matrix(matrix);
  auto out = open_out(path);
  for (const Vec& row : matrix) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
  if (!out) throw FormatError(path + ": write failed");
}

void emit_heatmap(const std::vector<Vec>& matrix, const std::string& path_stem) {
  check_matrix(matrix);
  std::vector<std::vector<int>> levels(matrix.size(), std::vector<int>(matrix.front().size()));
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    for (std::size_t c = 0; c < matrix[r].size(); ++c) levels[r][c] = gray_level(matrix[r][c]);
  }
  write_pgm(levels, path_stem + ".pgm");
  write_svg(levels, path_stem + ".svg");
  write_matrix_csv(matrix, path_stem + ".csv");
}

double quantile(const Vec& sorted_values, double q) {
  if (sorted_values.empty()) throw InvalidArguments("quantile: empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArguments("quantile: q must be in [0,1]");
  const std::size_t n = sorted_values.size();
  const double h = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted_values[n - 1];
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

void emit_boxplot_csv(const std::vector<Vec>& matrix, const std::string& path) {
  check_matrix(matrix);
  auto out = open_out(path);
  out << "p,min,q1,median,q3,max\n";
  for (std::size_t p = 0; p < matrix.size(); ++p) {
    Vec values;
    values.reserve(matrix[p].size());
    for (double v : matrix[p]) {
      if (std::isfinite(v)) values.push_back(v);
    }
    out << p;
    if (values.empty()) {
      out << ",nan,nan,nan,nan,nan\n";
      continue;
    }
    std::sort(values.begin(), values.end());
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      out << ',' << format_double(quantile(values, q));
    }
    out << '\n';
  }
  if (!out) throw FormatError(path + ": write failed");
}

void emit_histogram2d(const std::vector<std::vector<long>>& counts, const std::string& path_stem) {
  if (counts.empty() || counts.front().empty()) {
    throw InvalidArguments("histogram figure: empty counts");
  }
  long max_count = 0;
  for (const auto& row : counts) {
    if (row.size() != counts.front().size()) throw DimensionError("histogram figure: ragged counts");
    for (long v : row) max_count = std::max(max_count, v);
  }
  const double log_max = std::log1p(static_cast<double>(max_count));

  std::vector<std::vector<int>> levels(counts.size(), std::vector<int>(counts.front().size(), 0));
  std::vector<Vec> exact(counts.size(), Vec(counts.front().size()));
  for (std::size_t r = 0; r < counts.size(); ++r) {
    for (std::size_t c = 0; c < counts[r].size(); ++c) {
      exact[r][c] = static_cast<double>(counts[r][c]);
      if (max_count > 0) {
        levels[r][c] =
            gray_level(std::log1p(static_cast<double>(counts[r][c])) / log_max);
      }
    }
  }
  write_pgm(levels, path_stem + ".pgm");
  write_svg(levels, path_stem + ".svg");
  write_matrix_csv(exact, path_stem + ".csv");
}

}  // namespace transferlab
