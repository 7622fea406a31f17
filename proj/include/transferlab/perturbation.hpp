#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "transferlab/common.hpp"
#include "transferlab/dataset.hpp"

namespace transferlab {

// One adversarial example x' = x + delta with its provenance: the source
// index p, the perturbation index d, the surrogate's labels on both points,
// and the stream seed that produced it.
struct PerturbationRecord {
  int source_index = 0;        // p
  int perturbation_index = 0;  // d
  Vec x_prime;
  Vec delta;
  double l2_norm = 0.0;
  int surrogate_label_source = 0;
  int surrogate_label_adv = 0;
  std::optional<int> target_class;
  std::uint64_t seed = 0;
};

// Checks the record's field invariants against its source point; throws
// InvalidArguments on the first violation. Accumulation tolerance 1e-9.
void validate_record(const PerturbationRecord& record, std::span<const double> source_features);

struct AttackFailure {
  int source_index = 0;
  int perturbation_index = 0;
  std::string reason;
};

// A generated perturbation set together with the source points it grew from.
// Records are kept in (p, d) row-major order over the successful attacks.
struct PerturbationSet {
  std::string surrogate_id;
  int feature_dim = 0;
  int perturbations_per_source = 0;
  std::vector<LabeledSample> sources;    // indexed by p
  std::vector<int> source_test_indices;  // position of each source in the test split
  std::vector<PerturbationRecord> records;
  std::vector<AttackFailure> failures;

  void validate() const;  // runs validate_record over every record
};

// Directory layout: meta.json (indices, labels, norms, seeds) plus flat
// little-endian float64 blobs x_prime.f64 and sources.f64.
void save_perturbation_set(const PerturbationSet& set, const std::string& dir);
PerturbationSet load_perturbation_set(const std::string& dir);

}  // namespace transferlab
