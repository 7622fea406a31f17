#include "transferlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "transferlab/errors.hpp"

namespace transferlab {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Population standard deviation over the finite entries of a range.
template <typename GetValue>
std::pair<double, std::size_t> mean_over_finite(std::size_t n, GetValue get) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = get(i);
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  }
  return {count ? sum / static_cast<double>(count) : kNaN, count};
}

template <typename GetValue>
double population_std(std::size_t n, GetValue get) {
  const auto [mean, count] = mean_over_finite(n, get);
  if (count == 0) return kNaN;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = get(i);
    if (std::isfinite(v)) {
      const double diff = v - mean;
      acc += diff * diff;
    }
  }
  return std::sqrt(acc / static_cast<double>(count));
}

void check_same_dims(const TransferGrid& a, const TransferGrid& b) {
  if (a.source_count != b.source_count ||
      a.perturbations_per_source != b.perturbations_per_source ||
      a.target_count != b.target_count) {
    throw DimensionError("surrogate_agreement: grid dimensions differ");
  }
}

}  // namespace

bool is_adversarial(const Classifier& f, std::span<const double> x,
                    std::span<const double> x_prime, double epsilon) {
  if (x.size() != x_prime.size() || static_cast<int>(x.size()) != f.feature_dim()) {
    throw DimensionError("is_adversarial: dimension mismatch");
  }
  if (!(epsilon > 0.0)) throw InvalidArguments("is_adversarial: epsilon must be > 0");
  if (f.predict_label(x_prime) == f.predict_label(x)) return false;
  return l2_distance(x, x_prime) <= epsilon;
}

int targeted_indicator(int target_label_source, int target_label_adv, int surrogate_label_adv) {
  return (target_label_adv != target_label_source && target_label_adv == surrogate_label_adv) ? 1
                                                                                              : 0;
}

int nontargeted_indicator(int target_label_source, int target_label_adv,
                          int surrogate_label_source, int surrogate_label_adv) {
  return (target_label_adv != target_label_source && surrogate_label_adv != surrogate_label_source)
             ? 1
             : 0;
}

double transfer_expectation(std::span<const int> indicators) {
  if (indicators.empty()) throw InvalidArguments("transfer_expectation: no indicators");
  long sum = 0;
  for (int v : indicators) {
    if (v != 0 && v != 1) throw InvalidArguments("transfer_expectation: indicators must be 0/1");
    sum += v;
  }
  return static_cast<double>(sum) / static_cast<double>(indicators.size());
}

TransferGrid::TransferGrid(int sources, int perturbations, int targets)
    : source_count(sources), perturbations_per_source(perturbations), target_count(targets) {
  if (sources < 1 || perturbations < 1 || targets < 1) {
    throw InvalidArguments("transfer grid: all dimensions must be >= 1");
  }
  const std::size_t cells =
      static_cast<std::size_t>(sources) * perturbations * targets;
  targeted.assign(cells, 0);
  nontargeted.assign(cells, 0);
  valid.assign(static_cast<std::size_t>(sources) * perturbations, 0);
}

std::size_t TransferGrid::cell(int p, int d, int j) const {
  return (static_cast<std::size_t>(p) * perturbations_per_source + d) * target_count + j;
}

std::size_t TransferGrid::pd(int p, int d) const {
  return static_cast<std::size_t>(p) * perturbations_per_source + d;
}

std::vector<Vec> TransferGrid::expectation_matrix(bool targeted_variant) const {
  const auto& tensor = targeted_variant ? targeted : nontargeted;
  std::vector<Vec> matrix(source_count, Vec(perturbations_per_source, kNaN));
  for (int p = 0; p < source_count; ++p) {
    for (int d = 0; d < perturbations_per_source; ++d) {
      if (!is_valid(p, d)) continue;
      long sum = 0;
      for (int j = 0; j < target_count; ++j) sum += tensor[cell(p, d, j)];
      matrix[p][d] = static_cast<double>(sum) / static_cast<double>(target_count);
    }
  }
  return matrix;
}

DispersionStats dispersion_stats(const std::vector<Vec>& expectation) {
  if (expectation.empty() || expectation.front().empty()) {
    throw InvalidArguments("dispersion_stats: expectation matrix must have at least one column");
  }
  const std::size_t cols = expectation.front().size();
  for (const Vec& row : expectation) {
    if (row.size() != cols) throw DimensionError("dispersion_stats: ragged expectation matrix");
  }

  DispersionStats stats;
  stats.per_source_std.reserve(expectation.size());
  for (const Vec& row : expectation) {
    stats.per_source_std.push_back(population_std(cols, [&](std::size_t i) { return row[i]; }));
  }
  stats.mean_per_source_std =
      mean_over_finite(stats.per_source_std.size(),
                       [&](std::size_t i) { return stats.per_source_std[i]; })
          .first;
  stats.overall_std = population_std(expectation.size() * cols, [&](std::size_t i) {
    return expectation[i / cols][i % cols];
  });
  return stats;
}

double matrix_mean(const std::vector<Vec>& matrix) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Vec& row : matrix) {
    for (double v : row) {
      if (std::isfinite(v)) {
        sum += v;
        ++count;
      }
    }
  }
  if (count == 0) throw InvalidArguments("matrix_mean: no finite entries");
  return sum / static_cast<double>(count);
}

AgreementResult surrogate_agreement(const TransferGrid& grid_a, const TransferGrid& grid_b,
                                    bool targeted_variant) {
  check_same_dims(grid_a, grid_b);
  const auto& ta = targeted_variant ? grid_a.targeted : grid_a.nontargeted;
  const auto& tb = targeted_variant ? grid_b.targeted : grid_b.nontargeted;

  long total = 0, equal = 0;
  long nonzero_total = 0, nonzero_equal = 0;
  for (int p = 0; p < grid_a.source_count; ++p) {
    for (int d = 0; d < grid_a.perturbations_per_source; ++d) {
      if (!grid_a.is_valid(p, d) || !grid_b.is_valid(p, d)) continue;
      bool any_nonzero = false;
      long pair_equal = 0;
      for (int j = 0; j < grid_a.target_count; ++j) {
        const std::size_t idx = grid_a.cell(p, d, j);
        if (ta[idx] || tb[idx]) any_nonzero = true;
        if (ta[idx] == tb[idx]) ++pair_equal;
      }
      total += grid_a.target_count;
      equal += pair_equal;
      if (any_nonzero) {
        nonzero_total += grid_a.target_count;
        nonzero_equal += pair_equal;
      }
    }
  }
  if (total == 0) throw InvalidArguments("surrogate_agreement: no valid cells in common");

  AgreementResult result;
  result.overall = static_cast<double>(equal) / static_cast<double>(total);
  if (nonzero_total > 0) {
    result.nonzero = static_cast<double>(nonzero_equal) / static_cast<double>(nonzero_total);
  }
  return result;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("pearson: length mismatch");
  if (a.size() < 2) throw InvalidArguments("pearson: need at least two points");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    throw ZeroVarianceError("pearson: an input has zero variance");
  }
  return cov / std::sqrt(var_a * var_b);
}

std::vector<std::vector<long>> histogram2d(std::span<const double> a, std::span<const double> b,
                                           int bins) {
  if (a.size() != b.size()) throw DimensionError("histogram2d: length mismatch");
  if (bins < 1) throw InvalidArguments("histogram2d: bins must be >= 1");
  std::vector<std::vector<long>> counts(bins, std::vector<long>(bins, 0));
  auto bin_of = [bins](double v) {
    const int idx = static_cast<int>(std::floor(v * bins));
    return std::clamp(idx, 0, bins - 1);  // right-inclusive last bin
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    counts[bin_of(a[i])][bin_of(b[i])]++;
  }
  return counts;
}

void save_grid_csv(const TransferGrid& grid, bool targeted_variant, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  const auto& tensor = targeted_variant ? grid.targeted : grid.nontargeted;
  out << "p,d";
  for (int j = 0; j < grid.target_count; ++j) out << ",j" << j;
  out << '\n';
  for (int p = 0; p < grid.source_count; ++p) {
    for (int d = 0; d < grid.perturbations_per_source; ++d) {
      out << p << ',' << d;
      for (int j = 0; j < grid.target_count; ++j) {
        out << ',' << (grid.is_valid(p, d) ? static_cast<int>(tensor[grid.cell(p, d, j)]) : -1);
      }
      out << '\n';
    }
  }
  if (!out) throw FormatError(path + ": write failed");
}

void save_transfer_grid(const TransferGrid& grid, const std::string& targeted_path,
                        const std::string& nontargeted_path) {
  save_grid_csv(grid, true, targeted_path);
  save_grid_csv(grid, false, nontargeted_path);
}

namespace {

// Parses one grid CSV into (tensor, valid, dims).
struct ParsedGridCsv {
  int source_count = 0;
  int perturbations = 0;
  int target_count = 0;
  std::vector<std::uint8_t> tensor;
  std::vector<std::uint8_t> valid;
};

ParsedGridCsv parse_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");

  ParsedGridCsv parsed;
  {
    std::stringstream header(line);
    std::string cell;
    int columns = 0;
    while (std::getline(header, cell, ',')) ++columns;
    if (columns < 3) throw FormatError(path + ": malformed header");
    parsed.target_count = columns - 2;
  }

  std::vector<std::vector<int>> rows;
  int max_p = -1, max_d = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<int> values;
    while (std::getline(ss, cell, ',')) {
      values.push_back(static_cast<int>(parse_double(cell)));
    }
    if (static_cast<int>(values.size()) != parsed.target_count + 2) {
      throw FormatError(path + ": ragged row");
    }
    max_p = std::max(max_p, values[0]);
    max_d = std::max(max_d, values[1]);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw FormatError(path + ": no data rows");
  parsed.source_count = max_p + 1;
  parsed.perturbations = max_d + 1;
  parsed.tensor.assign(
      static_cast<std::size_t>(parsed.source_count) * parsed.perturbations * parsed.target_count,
      0);
  parsed.valid.assign(static_cast<std::size_t>(parsed.source_count) * parsed.perturbations, 0);
  for (const auto& values : rows) {
    const int p = values[0], d = values[1];
    const std::size_t pd = static_cast<std::size_t>(p) * parsed.perturbations + d;
    const bool row_valid = values[2] >= 0;
    parsed.valid[pd] = row_valid ? 1 : 0;
    for (int j = 0; j < parsed.target_count; ++j) {
      const int v = values[2 + j];
      if (row_valid && v != 0 && v != 1) throw FormatError(path + ": indicator outside {0,1}");
      parsed.tensor[pd * parsed.target_count + j] = row_valid ? static_cast<std::uint8_t>(v) : 0;
    }
  }
  return parsed;
}

}  // namespace

TransferGrid load_transfer_grid(const std::string& targeted_path,
                                const std::string& nontargeted_path) {
  const ParsedGridCsv t = parse_grid_csv(targeted_path);
  const ParsedGridCsv n = parse_grid_csv(nontargeted_path);
  if (t.source_count != n.source_count || t.perturbations != n.perturbations ||
      t.target_count != n.target_count || t.valid != n.valid) {
    throw FormatError("transfer grid: targeted/nontargeted files disagree");
  }
  TransferGrid grid(t.source_count, t.perturbations, t.target_count);
  grid.targeted = t.tensor;
  grid.nontargeted = n.tensor;
  grid.valid = t.valid;
  return grid;
}

}  // namespace transferlab
