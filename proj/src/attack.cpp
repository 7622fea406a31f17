#include "transferlab/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "transferlab/errors.hpp"

namespace transferlab {

namespace {

constexpr double kStepUnderflow = 1e-10;
constexpr double kZeroGradient = 1e-12;
constexpr int kMaxRadiusAdjustments = 10;

Vec lerp(std::span<const double> a, std::span<const double> b, double alpha) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + alpha * (b[i] - a[i]);
  return out;
}

// Bisection core. The caller vouches that `x` is non-adversarial; `x_adv` is
// verified here unless the caller already queried it this iteration.
Vec bisect_impl(const SurrogateOracle& oracle, std::span<const double> x,
                std::span<const double> x_adv, double tolerance, bool verify_adversarial) {
  if (!(tolerance > 0.0 && tolerance < 0.5)) {
    throw InvalidArguments("boundary_bisect: tolerance must be in (0, 0.5)");
  }
  if (x.size() != x_adv.size()) {
    throw DimensionError("boundary_bisect: endpoint dimensions differ");
  }
  if (verify_adversarial && !oracle.is_adversarial(x_adv)) {
    throw InvalidArguments("boundary_bisect: endpoints are not on opposite boundary sides");
  }
  // Degenerate segment: the endpoints are already closer than the tolerance.
  if (l2_distance(x, x_adv) <= tolerance) return Vec(x_adv.begin(), x_adv.end());

  double lo = 0.0;  // source side
  double hi = 1.0;  // adversarial side
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (oracle.is_adversarial(lerp(x, x_adv, mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lerp(x, x_adv, hi);
}

int resolve_target_class(const AttackConfig& cfg, int source_label, int class_count,
                         RngStream& rng) {
  if (cfg.target_class) {
    if (*cfg.target_class == source_label) {
      throw InvalidArguments("attack: target_class equals the source label");
    }
    if (*cfg.target_class < 0 || *cfg.target_class >= class_count) {
      throw InvalidArguments("attack: target_class out of range");
    }
    return *cfg.target_class;
  }
  // Uniform over the non-source classes.
  const int draw = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(class_count - 1)));
  return draw >= source_label ? draw + 1 : draw;
}

}  // namespace

std::string to_string(AttackMode mode) {
  return mode == AttackMode::blackbox ? "blackbox" : "whitebox";
}

AttackMode parse_attack_mode(const std::string& name) {
  if (name == "blackbox") return AttackMode::blackbox;
  if (name == "whitebox") return AttackMode::whitebox;
  throw InvalidArguments("unknown attack mode: '" + name + "'");
}

void AttackConfig::validate() const {
  if (max_iterations < 1) throw InvalidArguments("attack config: max_iterations must be >= 1");
  if (!(bisect_tolerance > 0.0 && bisect_tolerance < 0.5)) {
    throw InvalidArguments("attack config: bisect_tolerance must be in (0, 0.5)");
  }
  if (mc_budget < 10) throw InvalidArguments("attack config: mc_budget must be >= 10");
  if (!(mc_radius_scale > 0.0)) throw InvalidArguments("attack config: mc_radius_scale must be > 0");
  if (!(step_shrink > 0.0 && step_shrink < 1.0)) {
    throw InvalidArguments("attack config: step_shrink must be in (0, 1)");
  }
  if (epsilon && !(*epsilon > 0.0)) throw InvalidArguments("attack config: epsilon must be > 0");
  if (!targeted && target_class) {
    throw InvalidArguments("attack config: target_class requires targeted mode");
  }
}

SurrogateOracle::SurrogateOracle(const Classifier& model, int source_label,
                                 std::optional<int> target_class)
    : model_(model), source_label_(source_label), target_class_(target_class) {
  if (source_label < 0 || source_label >= model.class_count()) {
    throw InvalidArguments("oracle: source label out of range");
  }
  if (target_class_ && *target_class_ == source_label) {
    throw InvalidArguments("oracle: target class equals the source label");
  }
}

bool SurrogateOracle::is_adversarial(std::span<const double> x) const {
  ++queries_;
  const int label = model_.predict_label(x);
  return target_class_ ? label == *target_class_ : label != source_label_;
}

int SurrogateOracle::label(std::span<const double> x) const {
  ++queries_;
  return model_.predict_label(x);
}

Vec find_initial_adversarial(const Classifier& surrogate, const LabeledSample& source,
                             const AttackConfig& cfg, const Dataset& candidates, RngStream& rng) {
  cfg.validate();
  std::optional<int> target;
  if (cfg.targeted) {
    target = resolve_target_class(cfg, source.label, surrogate.class_count(), rng);
  }
  SurrogateOracle oracle(surrogate, source.label, target);

  std::vector<std::size_t> qualifying;
  for (std::size_t i = 0; i < candidates.samples.size(); ++i) {
    if (oracle.is_adversarial(candidates.samples[i].features)) qualifying.push_back(i);
  }
  if (qualifying.empty()) {
    throw NoInitialAdversarial("no candidate classified " +
                               (target ? "as class " + std::to_string(*target)
                                       : std::string("differently from the source")));
  }
  const std::size_t pick = qualifying[rng.next_below(qualifying.size())];
  return clipped01(candidates.samples[pick].features);
}

Vec boundary_bisect(const SurrogateOracle& oracle, std::span<const double> x,
                    std::span<const double> x_adv, double tolerance) {
  return bisect_impl(oracle, x, x_adv, tolerance, true);
}

Vec boundary_bisect(const Classifier& surrogate, std::span<const double> x,
                    std::span<const double> x_adv, double tolerance) {
  SurrogateOracle oracle(surrogate, surrogate.predict_label(x));
  return bisect_impl(oracle, x, x_adv, tolerance, true);
}

Vec mc_normal_estimate(const SurrogateOracle& oracle, std::span<const double> boundary_point,
                       int budget, double radius, RngStream& rng) {
  if (budget < 2) throw InvalidArguments("mc_normal_estimate: budget must be >= 2");
  if (!(radius > 0.0)) throw InvalidArguments("mc_normal_estimate: radius must be > 0");
  const std::size_t dim = boundary_point.size();

  std::vector<Vec> directions(budget);
  std::vector<double> sign(budget);
  double sign_sum = 0.0;
  Vec probe(dim);
  for (int b = 0; b < budget; ++b) {
    directions[b] = rng.unit_vector(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      probe[i] = std::clamp(boundary_point[i] + radius * directions[b][i], 0.0, 1.0);
    }
    sign[b] = oracle.is_adversarial(probe) ? 1.0 : -1.0;
    sign_sum += sign[b];
  }
  const double mean_sign = sign_sum / budget;
  if (mean_sign == 1.0 || mean_sign == -1.0) {
    throw DegenerateEstimate("mc_normal_estimate: all probes on one side of the boundary",
                             mean_sign > 0.0);
  }

  Vec estimate(dim, 0.0);
  for (int b = 0; b < budget; ++b) {
    const double w = sign[b] - mean_sign;
    for (std::size_t i = 0; i < dim; ++i) estimate[i] += w * directions[b][i];
  }
  const double norm = l2_norm(estimate);
  if (norm < 1e-15) {
    throw DegenerateEstimate("mc_normal_estimate: probe contributions cancelled", mean_sign > 0.0);
  }
  for (double& v : estimate) v /= norm;
  return estimate;
}

Vec mc_normal_estimate(const Classifier& surrogate, std::span<const double> boundary_point,
                       int budget, double radius, RngStream& rng, int source_label) {
  SurrogateOracle oracle(surrogate, source_label);
  return mc_normal_estimate(oracle, boundary_point, budget, radius, rng);
}

Vec whitebox_normal(const Classifier& surrogate, std::span<const double> boundary_point,
                    int source_label, int adv_label) {
  if (!surrogate.differentiable()) {
    throw UnsupportedOperation("whitebox_normal: surrogate is not differentiable");
  }
  Vec grad = surrogate.boundary_gradient(boundary_point, adv_label, source_label);
  const double norm = l2_norm(grad);
  if (norm < kZeroGradient) {
    throw DegenerateGradient("whitebox_normal: boundary gradient vanished");
  }
  for (double& v : grad) v /= norm;
  return grad;
}

Vec perpendicular_step(std::span<const double> boundary_point, std::span<const double> normal,
                       std::span<const double> source, double step_size,
                       const SurrogateOracle& oracle, double step_shrink) {
  if (!(step_size > 0.0)) throw InvalidArguments("perpendicular_step: step_size must be > 0");
  if (!(step_shrink > 0.0 && step_shrink < 1.0)) {
    throw InvalidArguments("perpendicular_step: step_shrink must be in (0, 1)");
  }
  if (boundary_point.size() != normal.size() || boundary_point.size() != source.size()) {
    throw DimensionError("perpendicular_step: dimension mismatch");
  }
  const std::size_t dim = boundary_point.size();
  Vec candidate(dim);
  while (step_size >= kStepUnderflow) {
    for (std::size_t i = 0; i < dim; ++i) {
      candidate[i] = std::clamp(boundary_point[i] + step_size * normal[i], 0.0, 1.0);
    }
    if (oracle.is_adversarial(candidate)) return candidate;
    step_size *= step_shrink;
  }
  throw StepFailure("perpendicular_step: no adversarial point before step underflow");
}

Vec perpendicular_step(std::span<const double> boundary_point, std::span<const double> normal,
                       std::span<const double> source, double step_size,
                       const Classifier& surrogate, double step_shrink) {
  SurrogateOracle oracle(surrogate, surrogate.predict_label(source));
  return perpendicular_step(boundary_point, normal, source, step_size, oracle, step_shrink);
}

AttackResult run_attack(const Classifier& surrogate, const LabeledSample& source,
                        const AttackConfig& cfg, const Dataset& candidates, RngStream& rng,
                        int source_index, int perturbation_index) {
  cfg.validate();
  if (static_cast<int>(source.features.size()) != surrogate.feature_dim()) {
    throw DimensionError("run_attack: source dimension mismatch");
  }
  if (surrogate.predict_label(source.features) != source.label) {
    throw InvalidSource("run_attack: surrogate misclassifies the source point");
  }
  if (cfg.mode == AttackMode::whitebox && !surrogate.differentiable()) {
    throw UnsupportedOperation("run_attack: whitebox mode needs a differentiable surrogate");
  }

  const std::uint64_t stream_seed = rng.derived_seed();
  std::optional<int> target;
  if (cfg.targeted) {
    target = resolve_target_class(cfg, source.label, surrogate.class_count(), rng);
  }
  SurrogateOracle oracle(surrogate, source.label, target);

  // The initial adversarial draw reuses the already-resolved target class.
  AttackConfig pinned = cfg;
  pinned.target_class = target;
  Vec offset = find_initial_adversarial(surrogate, source, pinned, candidates, rng);

  const double dim = static_cast<double>(surrogate.feature_dim());
  AttackTrace trace;
  trace.iterates.reserve(cfg.max_iterations);
  Vec best;
  double best_distance = std::numeric_limits<double>::infinity();

  for (int t = 0; t < cfg.max_iterations; ++t) {
    // The offset point was verified adversarial when it was produced.
    const Vec x_t = bisect_impl(oracle, source.features, offset, cfg.bisect_tolerance, t == 0);
    const double distance = l2_distance(x_t, source.features);
    if (distance < best_distance) {
      best_distance = distance;
      best = x_t;
    }
    trace.iterates.push_back({t, x_t, offset, distance, oracle.queries()});
    if (t + 1 == cfg.max_iterations) break;

    Vec normal;
    if (cfg.mode == AttackMode::whitebox) {
      const int adv_label = target ? *target : oracle.label(x_t);
      normal = whitebox_normal(surrogate, x_t, source.label, adv_label);
    } else {
      const int budget =
          static_cast<int>(cfg.mc_budget * std::sqrt(static_cast<double>(t) + 1.0));
      double radius = cfg.mc_radius_scale * distance / std::sqrt(dim);
      for (int attempt = 0;; ++attempt) {
        try {
          normal = mc_normal_estimate(oracle, x_t, budget, radius, rng);
          break;
        } catch (const DegenerateEstimate& e) {
          if (attempt + 1 >= kMaxRadiusAdjustments) throw;
          radius *= e.all_adversarial ? 2.0 : 0.5;
        }
      }
    }

    const double step_size = distance / std::sqrt(static_cast<double>(t) + 1.0);
    offset = perpendicular_step(x_t, normal, source.features, step_size, oracle, cfg.step_shrink);
    trace.iterates.back().queries = oracle.queries();
  }
  trace.total_queries = oracle.queries();

  PerturbationRecord record;
  record.source_index = source_index;
  record.perturbation_index = perturbation_index;
  record.x_prime = best;
  record.delta.resize(best.size());
  for (std::size_t i = 0; i < best.size(); ++i) record.delta[i] = best[i] - source.features[i];
  record.l2_norm = l2_norm(record.delta);
  record.surrogate_label_source = source.label;
  record.surrogate_label_adv = surrogate.predict_label(best);
  record.target_class = target;
  record.seed = stream_seed;
  return {std::move(record), std::move(trace)};
}

}  // namespace transferlab
