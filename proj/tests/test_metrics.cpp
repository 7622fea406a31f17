#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "transferlab/errors.hpp"
#include "transferlab/metrics.hpp"

using namespace transferlab;
using transferlab::testing::hyperplane_model;
using transferlab::testing::ScratchDir;

namespace {

// Independent straightforward re-implementations used as oracles.

double oracle_mean(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double oracle_population_std(const Vec& v) {
  const double m = oracle_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double oracle_pearson(const Vec& a, const Vec& b) {
  const double ma = oracle_mean(a), mb = oracle_mean(b);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

// Exhaustive triple enumeration of the agreement definition.
std::pair<double, std::optional<double>> oracle_agreement(const TransferGrid& a,
                                                          const TransferGrid& b,
                                                          bool targeted_variant) {
  long total = 0, equal = 0, nz_total = 0, nz_equal = 0;
  for (int p = 0; p < a.source_count; ++p) {
    for (int d = 0; d < a.perturbations_per_source; ++d) {
      if (!a.is_valid(p, d) || !b.is_valid(p, d)) continue;
      bool any = false;
      for (int j = 0; j < a.target_count; ++j) {
        const int va = targeted_variant ? a.targeted[a.cell(p, d, j)] : a.nontargeted[a.cell(p, d, j)];
        const int vb = targeted_variant ? b.targeted[b.cell(p, d, j)] : b.nontargeted[b.cell(p, d, j)];
        if (va == 1 || vb == 1) any = true;
      }
      for (int j = 0; j < a.target_count; ++j) {
        const int va = targeted_variant ? a.targeted[a.cell(p, d, j)] : a.nontargeted[a.cell(p, d, j)];
        const int vb = targeted_variant ? b.targeted[b.cell(p, d, j)] : b.nontargeted[b.cell(p, d, j)];
        ++total;
        if (va == vb) ++equal;
        if (any) {
          ++nz_total;
          if (va == vb) ++nz_equal;
        }
      }
    }
  }
  std::optional<double> nz;
  if (nz_total > 0) nz = double(nz_equal) / double(nz_total);
  return {double(equal) / double(total), nz};
}

TransferGrid random_grid(int P, int D, int N, RngStream& rng, double one_rate,
                         double invalid_rate = 0.0) {
  TransferGrid grid(P, D, N);
  for (int p = 0; p < P; ++p) {
    for (int d = 0; d < D; ++d) {
      grid.valid[grid.pd(p, d)] = rng.next_double() >= invalid_rate ? 1 : 0;
      for (int j = 0; j < N; ++j) {
        const int nt = rng.next_double() < one_rate ? 1 : 0;
        // targeted implies nontargeted
        const int tg = nt == 1 && rng.next_double() < 0.5 ? 1 : 0;
        grid.nontargeted[grid.cell(p, d, j)] = static_cast<std::uint8_t>(nt);
        grid.targeted[grid.cell(p, d, j)] = static_cast<std::uint8_t>(tg);
      }
    }
  }
  return grid;
}

}  // namespace

TEST_CASE("is_adversarial follows the flip-and-budget definition") {
  const auto model = hyperplane_model({1.0, 0.0}, -0.5);
  const Vec x{0.8, 0.5};

  // Label does not flip: never adversarial, however small the move.
  CHECK_FALSE(is_adversarial(*model, x, Vec{0.79, 0.5}, 10.0));

  // Label flips and the norm equals the budget exactly: inclusive.
  const Vec x_prime{0.3, 0.5};
  CHECK(l2_distance(x, x_prime) == 0.5);
  CHECK(is_adversarial(*model, x, x_prime, 0.5));

  // Budget exceeded by 1%.
  CHECK_FALSE(is_adversarial(*model, x, x_prime, 0.5 / 1.01));

  CHECK_THROWS_AS((void)is_adversarial(*model, x, Vec{0.1, 0.2, 0.3}, 1.0), DimensionError);
}

TEST_CASE("indicator examples") {
  CHECK(targeted_indicator(3, 7, 7) == 1);
  CHECK(targeted_indicator(3, 3, 7) == 0);
  CHECK(targeted_indicator(3, 5, 7) == 0);

  CHECK(nontargeted_indicator(3, 5, 3, 7) == 1);
  CHECK(nontargeted_indicator(3, 3, 3, 7) == 0);
  CHECK(nontargeted_indicator(3, 5, 3, 3) == 0);
}

TEST_CASE("indicator implication: targeted success implies nontargeted success") {
  // Whenever the surrogate was fooled (fS_xp != fS_x), T_T = 1 forces T_N = 1.
  for (int fT_x = 0; fT_x < 4; ++fT_x) {
    for (int fT_xp = 0; fT_xp < 4; ++fT_xp) {
      for (int fS_x = 0; fS_x < 4; ++fS_x) {
        for (int fS_xp = 0; fS_xp < 4; ++fS_xp) {
          if (fS_xp == fS_x) continue;
          const int tt = targeted_indicator(fT_x, fT_xp, fS_xp);
          const int tn = nontargeted_indicator(fT_x, fT_xp, fS_x, fS_xp);
          CHECK(tt <= tn);
        }
      }
    }
  }
}

TEST_CASE("transfer expectation is the arithmetic mean") {
  CHECK(transfer_expectation(std::vector<int>{1, 0, 1, 0}) == 0.5);
  CHECK(transfer_expectation(std::vector<int>{0, 0, 0}) == 0.0);
  CHECK(transfer_expectation(std::vector<int>{1, 1}) == 1.0);
  CHECK_THROWS_AS((void)transfer_expectation(std::vector<int>{}), InvalidArguments);
  CHECK_THROWS_AS((void)transfer_expectation(std::vector<int>{2}), InvalidArguments);
}

TEST_CASE("dispersion examples") {
  // Constant rows with differing levels: zero within-row spread, positive
  // overall spread.
  const std::vector<Vec> rows_constant{{0.2, 0.2, 0.2}, {0.8, 0.8, 0.8}};
  const DispersionStats a = dispersion_stats(rows_constant);
  CHECK(a.mean_per_source_std == doctest::Approx(0.0));  // constant rows, up to rounding
  CHECK(a.overall_std > 0.1);

  const DispersionStats b = dispersion_stats({{0.0, 1.0}});
  CHECK(b.per_source_std[0] == 0.5);

  const DispersionStats c = dispersion_stats({{0.3, 0.3}, {0.3, 0.3}});
  CHECK(c.mean_per_source_std == 0.0);
  CHECK(c.overall_std == 0.0);

  CHECK_THROWS_AS((void)dispersion_stats({}), InvalidArguments);
  CHECK_THROWS_AS((void)dispersion_stats({Vec{}}), InvalidArguments);
}

TEST_CASE("dispersion matches the oracle on random matrices") {
  RngStream rng(41, {});
  for (int trial = 0; trial < 100; ++trial) {
    const int P = 1 + static_cast<int>(rng.next_below(6));
    const int D = 1 + static_cast<int>(rng.next_below(6));
    std::vector<Vec> m(P, Vec(D));
    Vec flat;
    for (auto& row : m) {
      for (double& v : row) {
        v = rng.next_double();
        flat.push_back(v);
      }
    }
    const DispersionStats stats = dispersion_stats(m);
    Vec row_stds;
    for (const auto& row : m) row_stds.push_back(oracle_population_std(row));
    for (int p = 0; p < P; ++p) {
      CHECK(std::abs(stats.per_source_std[p] - row_stds[p]) < 1e-12);
    }
    CHECK(std::abs(stats.mean_per_source_std - oracle_mean(row_stds)) < 1e-12);
    CHECK(std::abs(stats.overall_std - oracle_population_std(flat)) < 1e-12);
  }
}

TEST_CASE("agreement: self, all-zero, dimension mismatch") {
  RngStream rng(42, {});
  const TransferGrid grid = random_grid(4, 3, 5, rng, 0.3);
  const AgreementResult self = surrogate_agreement(grid, grid, false);
  CHECK(self.overall == 1.0);
  REQUIRE(self.nonzero.has_value());
  CHECK(*self.nonzero == 1.0);

  TransferGrid zero_a(2, 2, 2), zero_b(2, 2, 2);
  std::fill(zero_a.valid.begin(), zero_a.valid.end(), 1);
  std::fill(zero_b.valid.begin(), zero_b.valid.end(), 1);
  const AgreementResult zero = surrogate_agreement(zero_a, zero_b, true);
  CHECK(zero.overall == 1.0);
  CHECK_FALSE(zero.nonzero.has_value());

  TransferGrid other(2, 2, 3);
  CHECK_THROWS_AS((void)surrogate_agreement(zero_a, other, true), DimensionError);
}

TEST_CASE("agreement matches exhaustive enumeration on random grids") {
  RngStream rng(43, {});
  for (int trial = 0; trial < 60; ++trial) {
    const int P = 1 + static_cast<int>(rng.next_below(5));
    const int D = 1 + static_cast<int>(rng.next_below(5));
    const int N = 1 + static_cast<int>(rng.next_below(5));
    const double rate = rng.next_double();
    TransferGrid a = random_grid(P, D, N, rng, rate, 0.1);
    TransferGrid b = random_grid(P, D, N, rng, rate, 0.1);
    b.valid = a.valid;  // matched (p,d) coverage
    bool any_valid = false;
    for (auto v : a.valid) any_valid |= v != 0;
    if (!any_valid) continue;
    for (bool variant : {true, false}) {
      const AgreementResult got = surrogate_agreement(a, b, variant);
      const auto want = oracle_agreement(a, b, variant);
      CHECK(std::abs(got.overall - want.first) < 1e-12);
      CHECK(got.nonzero.has_value() == want.second.has_value());
      if (got.nonzero) CHECK(std::abs(*got.nonzero - *want.second) < 1e-12);
    }
  }
}

TEST_CASE("pearson examples and oracle equivalence") {
  CHECK(pearson(Vec{1, 2, 3}, Vec{1, 2, 3}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(Vec{1, 2, 3}, Vec{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)pearson(Vec{1, 1, 1}, Vec{1, 2, 3}), ZeroVarianceError);
  CHECK_THROWS_AS((void)pearson(Vec{1, 2}, Vec{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS((void)pearson(Vec{1}, Vec{1}), InvalidArguments);

  RngStream rng(44, {});
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_below(40);
    Vec a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.next_double();
      b[i] = 0.3 * a[i] + rng.next_double();
    }
    CHECK(std::abs(pearson(a, b) - oracle_pearson(a, b)) < 1e-12);
  }
}

TEST_CASE("histogram2d: corners, conservation, uniform grid") {
  const std::vector<std::vector<long>> corner = histogram2d(Vec(7, 0.0), Vec(7, 0.0), 10);
  CHECK(corner[0][0] == 7);
  long total = 0;
  for (const auto& row : corner) {
    for (long v : row) total += v;
  }
  CHECK(total == 7);

  // 10x10 uniform lattice of bin centers -> exactly one count per cell.
  Vec a, b;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      a.push_back((i + 0.5) / 10.0);
      b.push_back((j + 0.5) / 10.0);
    }
  }
  const auto uniform = histogram2d(a, b, 10);
  for (const auto& row : uniform) {
    for (long v : row) CHECK(v == 1);
  }

  // Right edge lands in the last bin.
  const auto edge = histogram2d(Vec{1.0}, Vec{1.0}, 4);
  CHECK(edge[3][3] == 1);

  CHECK_THROWS_AS((void)histogram2d(Vec{0.1}, Vec{0.1, 0.2}, 4), DimensionError);
}

TEST_CASE("grid csv round trip preserves tensors and validity") {
  ScratchDir dir("grid");
  RngStream rng(45, {});
  const TransferGrid grid = random_grid(5, 4, 3, rng, 0.4, 0.2);
  save_transfer_grid(grid, dir.file("t.csv"), dir.file("n.csv"));
  const TransferGrid back = load_transfer_grid(dir.file("t.csv"), dir.file("n.csv"));
  CHECK(back.source_count == grid.source_count);
  CHECK(back.perturbations_per_source == grid.perturbations_per_source);
  CHECK(back.target_count == grid.target_count);
  CHECK(back.valid == grid.valid);
  // Invalid cells are normalized to zero on both sides of the trip.
  for (int p = 0; p < grid.source_count; ++p) {
    for (int d = 0; d < grid.perturbations_per_source; ++d) {
      if (!grid.is_valid(p, d)) continue;
      for (int j = 0; j < grid.target_count; ++j) {
        CHECK(back.targeted[back.cell(p, d, j)] == grid.targeted[grid.cell(p, d, j)]);
        CHECK(back.nontargeted[back.cell(p, d, j)] == grid.nontargeted[grid.cell(p, d, j)]);
      }
    }
  }

  // Expectation matrices: NaN on invalid cells, means over targets elsewhere.
  const auto matrix = grid.expectation_matrix(false);
  for (int p = 0; p < grid.source_count; ++p) {
    for (int d = 0; d < grid.perturbations_per_source; ++d) {
      if (!grid.is_valid(p, d)) {
        CHECK(std::isnan(matrix[p][d]));
      } else {
        long sum = 0;
        for (int j = 0; j < grid.target_count; ++j) sum += grid.nontargeted[grid.cell(p, d, j)];
        CHECK(matrix[p][d] == doctest::Approx(double(sum) / grid.target_count));
      }
    }
  }
}
