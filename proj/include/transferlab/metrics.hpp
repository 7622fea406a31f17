#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "transferlab/classifier.hpp"
#include "transferlab/common.hpp"

namespace transferlab {

// x' is adversarial for f at budget epsilon: the label flips and the
// perturbation stays within the (inclusive) L2 budget.
bool is_adversarial(const Classifier& f, std::span<const double> x,
                    std::span<const double> x_prime, double epsilon);

// 1 iff the target model is fooled and lands on the surrogate's adversarial
// label.
int targeted_indicator(int target_label_source, int target_label_adv, int surrogate_label_adv);

// 1 iff both models are fooled, labels free to differ.
int nontargeted_indicator(int target_label_source, int target_label_adv,
                          int surrogate_label_source, int surrogate_label_adv);

// Arithmetic mean of indicator values over a target ensemble.
double transfer_expectation(std::span<const int> indicators);

// Indicator tensors over (source p, perturbation d, target j) for one
// surrogate. Cells of (p, d) pairs without a usable record are flagged
// invalid and excluded from every aggregate.
struct TransferGrid {
  int source_count = 0;             // P
  int perturbations_per_source = 0; // D
  int target_count = 0;             // N_s
  std::string surrogate_id;
  std::vector<std::uint8_t> targeted;     // P*D*N_s, (p, d, j) row-major
  std::vector<std::uint8_t> nontargeted;  // same layout
  std::vector<std::uint8_t> valid;        // P*D

  TransferGrid() = default;
  TransferGrid(int sources, int perturbations, int targets);

  std::size_t cell(int p, int d, int j) const;
  std::size_t pd(int p, int d) const;
  bool is_valid(int p, int d) const { return valid[pd(p, d)] != 0; }

  // P x D expectation matrix for one variant; invalid cells are NaN.
  std::vector<Vec> expectation_matrix(bool targeted_variant) const;
};

// Population standard deviations of an expectation matrix: per source row,
// their mean, and over all entries combined. NaN entries (missing records)
// are skipped.
struct DispersionStats {
  Vec per_source_std;
  double mean_per_source_std = 0.0;
  double overall_std = 0.0;
};
DispersionStats dispersion_stats(const std::vector<Vec>& expectation);

// Mean over the finite entries of a matrix.
double matrix_mean(const std::vector<Vec>& matrix);

// Fraction of (p, d, j) triples with equal indicator values across two grids
// built from matched attack parameters. `nonzero` restricts to (p, d) pairs
// where at least one grid fooled at least one target; it is absent when no
// such pair exists.
struct AgreementResult {
  double overall = 0.0;
  std::optional<double> nonzero;
};
AgreementResult surrogate_agreement(const TransferGrid& grid_a, const TransferGrid& grid_b,
                                    bool targeted_variant);

// Product-moment correlation; throws ZeroVarianceError when either input is
// constant.
double pearson(std::span<const double> a, std::span<const double> b);

// bins x bins counts over paired values in [0,1]; uniform bin edges,
// right-inclusive last bin.
std::vector<std::vector<long>> histogram2d(std::span<const double> a, std::span<const double> b,
                                           int bins);

// Grid CSV: header "p,d,j0..", one row per (p, d); -1 marks invalid cells.
void save_grid_csv(const TransferGrid& grid, bool targeted_variant, const std::string& path);
void save_transfer_grid(const TransferGrid& grid, const std::string& targeted_path,
                        const std::string& nontargeted_path);
TransferGrid load_transfer_grid(const std::string& targeted_path,
                                const std::string& nontargeted_path);

}  // namespace transferlab
