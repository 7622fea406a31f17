#pragma once

#include <string>
#include <vector>

#include "transferlab/common.hpp"

namespace transferlab {

// Exact cell values, one row per source point.
void write_matrix_csv(const std::vector<Vec>& matrix, const std::string& path);

// Grayscale heatmap of a [0,1]-valued matrix: one cell per (p, d), rows are
// source points, columns perturbation indices. Writes <stem>.pgm (binary
// P5), <stem>.svg, and the exact-value sidecar <stem>.csv.
void emit_heatmap(const std::vector<Vec>& matrix, const std::string& path_stem);

// Linear-interpolation quantile (the common "type 7" rule) over sorted data.
double quantile(const Vec& sorted_values, double q);

// Per source row: min, Q1, median, Q3, max over the finite entries.
void emit_boxplot_csv(const std::vector<Vec>& matrix, const std::string& path);

// Count matrix rendered with log-scaled intensity (counts span orders of
// magnitude); writes <stem>.pgm, <stem>.svg, and exact counts to <stem>.csv.
void emit_histogram2d(const std::vector<std::vector<long>>& counts, const std::string& path_stem);

}  // namespace transferlab
