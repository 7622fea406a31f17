#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "transferlab/attack.hpp"
#include "transferlab/classifier.hpp"
#include "transferlab/dataset.hpp"
#include "transferlab/metrics.hpp"
#include "transferlab/perturbation.hpp"

namespace transferlab {

// Purpose ids for deriving keyed streams from the experiment root seed.
// Attack and target-class streams are keyed by (p, d) only, so matched
// perturbation pairs share identical attack parameters across surrogates.
enum StreamPurpose : std::uint64_t {
  kStreamDataset = 1,
  kStreamSplit = 2,
  kStreamSurrogateTrain = 3,
  kStreamTargetTrain = 4,
  kStreamSourceSelect = 5,
  kStreamAttack = 6,
  kStreamTargetClass = 7,
};

struct DatasetSpec {
  std::string path;            // empty -> built-in Gaussian blob generator
  std::string format = "csv";  // csv | idx; ignored when path is empty
  bool has_header = false;
  double train_fraction = 0.8;
  // Blob generator parameters.
  int classes = 10;
  int feature_dim = 16;
  int samples_per_class = 200;
  double blob_std = 0.15;

  void validate() const;
};

struct EnsembleSpec {
  int count = 1;  // N_s
  TrainingSpec spec;
};

struct ExperimentConfig {
  std::uint64_t root_seed = 1;
  DatasetSpec dataset;
  std::vector<TrainingSpec> surrogates;  // one or two
  std::vector<EnsembleSpec> targets;     // one or two target families
  int source_count = 8;             // P
  int perturbations_per_source = 4; // D
  AttackConfig attack;
  double epsilon = 1.0;  // L2 budget used to filter records into grids
  std::string output_dir = "out";

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& cfg);

struct VariantReport {
  std::vector<Vec> expectation;  // P x D; NaN marks missing cells
  double mean_expectation = 0.0;
  Vec per_source_std;
  double mean_per_source_std = 0.0;
  double overall_std = 0.0;
};

struct GridReport {
  int surrogate = 0;
  int ensemble = 0;
  long records_generated = 0;
  long records_within_epsilon = 0;
  long attack_failures = 0;
  VariantReport targeted;
  VariantReport nontargeted;
};

struct AgreementReport {
  int ensemble = 0;
  AgreementResult targeted;
  AgreementResult nontargeted;
};

struct CrossFamilyReport {
  int surrogate = 0;
  std::optional<double> pearson_targeted;
  std::optional<double> pearson_nontargeted;
};

struct MetricsReport {
  std::vector<GridReport> grids;
  std::vector<AgreementReport> agreement;       // two-surrogate runs
  std::vector<CrossFamilyReport> cross_family;  // two-family runs
};

std::string report_to_json_text(const MetricsReport& report, const ExperimentConfig& cfg);

// Deterministic dataset preparation: load (or synthesize) and split.
std::pair<Dataset, Dataset> prepare_dataset(const ExperimentConfig& cfg);

struct TrainedModels {
  std::vector<std::unique_ptr<Classifier>> surrogates;
  std::vector<std::vector<std::unique_ptr<Classifier>>> ensembles;
};

TrainedModels train_ensemble(const ExperimentConfig& cfg, const Dataset& train, int jobs);

// Uniform draw without replacement among test points every surrogate
// classifies correctly.
std::vector<int> select_sources(const Dataset& test,
                                std::span<const std::unique_ptr<Classifier>> surrogates,
                                int source_count, RngStream& rng);

// Attacks every (p, d) cell with its own keyed stream; failures are logged
// in the returned set, not fatal, unless more than half the attacks fail.
// When trace_dir is non-empty, one JSON-lines trace file is written per
// record.
PerturbationSet generate_perturbation_set(const Classifier& surrogate,
                                          const std::string& surrogate_id, const Dataset& test,
                                          const std::vector<int>& source_indices,
                                          const ExperimentConfig& cfg, int jobs,
                                          const std::string& trace_dir = "");

// Fills both indicator tensors; records over the epsilon budget or absent
// (failed attacks) are marked invalid.
TransferGrid evaluate_grid(const PerturbationSet& set, const Classifier& surrogate,
                           std::span<const std::unique_ptr<Classifier>> targets, double epsilon,
                           int jobs);

// Pipeline phases. Each loads its prerequisites from cfg.output_dir,
// persists its artifacts there, and refreshes the run manifest.
void phase_train(const ExperimentConfig& cfg, int jobs);
void phase_attack(const ExperimentConfig& cfg, int jobs, bool trace = false);
void phase_evaluate(const ExperimentConfig& cfg, int jobs);
MetricsReport phase_report(const ExperimentConfig& cfg);

// train -> attack -> evaluate -> report.
MetricsReport run_experiment(const ExperimentConfig& cfg, int jobs = 1, bool trace = false);

}  // namespace transferlab
