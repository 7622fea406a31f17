#pragma once

#include <optional>
#include <string>
#include <vector>

#include "transferlab/classifier.hpp"
#include "transferlab/dataset.hpp"
#include "transferlab/perturbation.hpp"
#include "transferlab/rng.hpp"

namespace transferlab {

enum class AttackMode { blackbox, whitebox };

std::string to_string(AttackMode mode);
AttackMode parse_attack_mode(const std::string& name);

struct AttackConfig {
  AttackMode mode = AttackMode::whitebox;
  int max_iterations = 15;
  // Relative segment-length stopping threshold for the bisection.
  double bisect_tolerance = 1e-3;
  // Initial Monte Carlo sample count; per-iteration budget grows as
  // mc_budget * sqrt(t + 1). Black-box mode only.
  int mc_budget = 100;
  // Probe radius is mc_radius_scale * ||x_t - x|| / sqrt(dim).
  double mc_radius_scale = 1.0;
  double step_shrink = 0.5;
  // Perturbation budget recorded with outputs; the traversal itself is
  // unconstrained and minimizes distance.
  std::optional<double> epsilon;
  bool targeted = true;
  std::optional<int> target_class;

  void validate() const;
};

struct AttackIterate {
  int iteration = 0;
  Vec boundary_point;  // on-boundary iterate x_t
  Vec offset_point;    // offset point whose bisection produced x_t
  double distance = 0.0;
  long queries = 0;  // cumulative label queries at the end of the iteration
};

struct AttackTrace {
  std::vector<AttackIterate> iterates;
  long total_queries = 0;
};

// Label-query wrapper fixing the adversarial predicate: label == target_class
// when targeted, label != source_label otherwise. Counts every query.
class SurrogateOracle {
 public:
  SurrogateOracle(const Classifier& model, int source_label,
                  std::optional<int> target_class = std::nullopt);

  bool is_adversarial(std::span<const double> x) const;
  int label(std::span<const double> x) const;

  long queries() const { return queries_; }
  int source_label() const { return source_label_; }
  const Classifier& model() const { return model_; }

 private:
  const Classifier& model_;
  int source_label_;
  std::optional<int> target_class_;
  mutable long queries_ = 0;
};

// Uniform draw (under rng) among candidates the surrogate classifies as the
// target class (targeted) or differently from the source (untargeted). This
// draw is what makes perturbations of one source independent of each other.
Vec find_initial_adversarial(const Classifier& surrogate, const LabeledSample& source,
                             const AttackConfig& cfg, const Dataset& candidates, RngStream& rng);

// Binary search for the boundary crossing on the segment [x, x_adv]; returns
// an adversarial-side point with segment-parameter uncertainty below
// `tolerance`. Costs at most ceil(log2(1/tolerance)) + 1 label queries.
Vec boundary_bisect(const SurrogateOracle& oracle, std::span<const double> x,
                    std::span<const double> x_adv, double tolerance);
Vec boundary_bisect(const Classifier& surrogate, std::span<const double> x,
                    std::span<const double> x_adv, double tolerance);

// Zeroth-order estimate of the boundary normal at a point just inside the
// adversarial region: sign-probe `budget` sphere-uniform directions at
// `radius` and average them with a baseline correction. Points toward the
// adversarial side.
Vec mc_normal_estimate(const SurrogateOracle& oracle, std::span<const double> boundary_point,
                       int budget, double radius, RngStream& rng);
Vec mc_normal_estimate(const Classifier& surrogate, std::span<const double> boundary_point,
                       int budget, double radius, RngStream& rng, int source_label);

// Analytic replacement for the Monte Carlo estimate: normalized ascent
// direction of logit_adv - logit_src, which points into the adversarial
// region.
Vec whitebox_normal(const Classifier& surrogate, std::span<const double> boundary_point,
                    int source_label, int adv_label);

// clip(x_t + step_size * normal), shrinking step_size geometrically until the
// result is adversarial. Throws StepFailure when step_size underflows 1e-10.
Vec perpendicular_step(std::span<const double> boundary_point, std::span<const double> normal,
                       std::span<const double> source, double step_size,
                       const SurrogateOracle& oracle, double step_shrink = 0.5);
Vec perpendicular_step(std::span<const double> boundary_point, std::span<const double> normal,
                       std::span<const double> source, double step_size,
                       const Classifier& surrogate, double step_shrink = 0.5);

struct AttackResult {
  PerturbationRecord record;
  AttackTrace trace;
};

// Full boundary traversal: initial adversarial point, then repeated
// bisect -> normal estimate -> perpendicular step; returns the
// minimum-distance boundary point found.
AttackResult run_attack(const Classifier& surrogate, const LabeledSample& source,
                        const AttackConfig& cfg, const Dataset& candidates, RngStream& rng,
                        int source_index = 0, int perturbation_index = 0);

}  // namespace transferlab
