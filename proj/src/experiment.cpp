#include "transferlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>

#include "transferlab/errors.hpp"
#include "transferlab/figures.hpp"
#include "transferlab/manifest.hpp"
#include "transferlab/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace transferlab {

namespace {

// ---------------------------------------------------------------------------
// Config parsing. Unknown keys are rejected so that a typo cannot silently
// fall back to a default.

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (item.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

template <typename T>
T get_field_or(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

TrainingSpec parse_training_spec(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"kind", "hidden_layers", "epochs", "learning_rate", "batch_size",
                          "tree_count", "max_depth"},
                      where);
  TrainingSpec spec;
  spec.kind = parse_model_kind(get_field<std::string>(j, "kind", where));
  spec.hidden_layers = get_field_or<std::vector<int>>(j, "hidden_layers", where,
                                                      spec.kind == ModelKind::mlp
                                                          ? std::vector<int>{32}
                                                          : std::vector<int>{});
  spec.epochs = get_field_or<int>(j, "epochs", where, spec.epochs);
  spec.learning_rate = get_field_or<double>(j, "learning_rate", where, spec.learning_rate);
  spec.batch_size = get_field_or<int>(j, "batch_size", where, spec.batch_size);
  spec.tree_count = get_field_or<int>(j, "tree_count", where, spec.tree_count);
  spec.max_depth = get_field_or<int>(j, "max_depth", where, spec.max_depth);
  spec.validate();
  return spec;
}

json training_spec_to_json(const TrainingSpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["hidden_layers"] = spec.hidden_layers;
  j["epochs"] = spec.epochs;
  j["learning_rate"] = spec.learning_rate;
  j["batch_size"] = spec.batch_size;
  j["tree_count"] = spec.tree_count;
  j["max_depth"] = spec.max_depth;
  return j;
}

AttackConfig parse_attack_config(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"mode", "max_iterations", "bisect_tolerance", "mc_budget",
                          "mc_radius_scale", "step_shrink", "targeted", "target_class"},
                      where);
  AttackConfig cfg;
  cfg.mode = parse_attack_mode(get_field_or<std::string>(j, "mode", where, to_string(cfg.mode)));
  cfg.max_iterations = get_field_or<int>(j, "max_iterations", where, cfg.max_iterations);
  cfg.bisect_tolerance = get_field_or<double>(j, "bisect_tolerance", where, cfg.bisect_tolerance);
  cfg.mc_budget = get_field_or<int>(j, "mc_budget", where, cfg.mc_budget);
  cfg.mc_radius_scale = get_field_or<double>(j, "mc_radius_scale", where, cfg.mc_radius_scale);
  cfg.step_shrink = get_field_or<double>(j, "step_shrink", where, cfg.step_shrink);
  cfg.targeted = get_field_or<bool>(j, "targeted", where, cfg.targeted);
  if (j.contains("target_class") && !j.at("target_class").is_null()) {
    cfg.target_class = get_field<int>(j, "target_class", where);
  }
  return cfg;
}

json attack_config_to_json(const AttackConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["max_iterations"] = cfg.max_iterations;
  j["bisect_tolerance"] = cfg.bisect_tolerance;
  j["mc_budget"] = cfg.mc_budget;
  j["mc_radius_scale"] = cfg.mc_radius_scale;
  j["step_shrink"] = cfg.step_shrink;
  j["targeted"] = cfg.targeted;
  j["target_class"] = cfg.target_class ? json(*cfg.target_class) : json(nullptr);
  return j;
}

DatasetSpec parse_dataset_spec(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"path", "format", "has_header", "train_fraction", "classes",
                          "feature_dim", "samples_per_class", "blob_std"},
                      where);
  DatasetSpec spec;
  spec.path = get_field_or<std::string>(j, "path", where, spec.path);
  spec.format = get_field_or<std::string>(j, "format", where, spec.format);
  spec.has_header = get_field_or<bool>(j, "has_header", where, spec.has_header);
  spec.train_fraction = get_field_or<double>(j, "train_fraction", where, spec.train_fraction);
  spec.classes = get_field_or<int>(j, "classes", where, spec.classes);
  spec.feature_dim = get_field_or<int>(j, "feature_dim", where, spec.feature_dim);
  spec.samples_per_class = get_field_or<int>(j, "samples_per_class", where, spec.samples_per_class);
  spec.blob_std = get_field_or<double>(j, "blob_std", where, spec.blob_std);
  spec.validate();
  return spec;
}

json dataset_spec_to_json(const DatasetSpec& spec) {
  json j;
  j["path"] = spec.path;
  j["format"] = spec.format;
  j["has_header"] = spec.has_header;
  j["train_fraction"] = spec.train_fraction;
  j["classes"] = spec.classes;
  j["feature_dim"] = spec.feature_dim;
  j["samples_per_class"] = spec.samples_per_class;
  j["blob_std"] = spec.blob_std;
  return j;
}

// ---------------------------------------------------------------------------
// Artifact paths.

fs::path models_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir) / "models"; }
fs::path perturbations_dir(const ExperimentConfig& cfg, int surrogate) {
  return fs::path(cfg.output_dir) / "perturbations" / ("s" + std::to_string(surrogate));
}
fs::path grids_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir) / "grids"; }
fs::path figures_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir) / "figures"; }

std::string surrogate_model_name(int i) { return "surrogate_" + std::to_string(i) + ".bin"; }
std::string target_model_name(int e, int j) {
  return "target_" + std::to_string(e) + "_" + std::to_string(j) + ".bin";
}

// The primary grid keeps the plain file names; extra grids get a suffix.
std::string grid_suffix(int surrogate, int ensemble) {
  if (surrogate == 0 && ensemble == 0) return "";
  return "_s" + std::to_string(surrogate) + "_e" + std::to_string(ensemble);
}

void update_manifest(const ExperimentConfig& cfg, const std::string& finished_phase) {
  auto phases = read_manifest_phases(cfg.output_dir);
  for (const char* name : {"train", "attack", "evaluate", "report"}) {
    phases.emplace(name, false);
  }
  phases[finished_phase] = true;
  bool complete = true;
  for (const auto& kv : phases) complete = complete && kv.second;
  write_manifest(cfg.output_dir, cfg.root_seed, phases, complete);
}

std::vector<std::unique_ptr<Classifier>> load_surrogates(const ExperimentConfig& cfg) {
  std::vector<std::unique_ptr<Classifier>> surrogates;
  for (std::size_t i = 0; i < cfg.surrogates.size(); ++i) {
    surrogates.push_back(load_model((models_dir(cfg) / surrogate_model_name(i)).string()));
  }
  return surrogates;
}

std::vector<std::vector<std::unique_ptr<Classifier>>> load_ensembles(const ExperimentConfig& cfg) {
  std::vector<std::vector<std::unique_ptr<Classifier>>> ensembles(cfg.targets.size());
  for (std::size_t e = 0; e < cfg.targets.size(); ++e) {
    for (int j = 0; j < cfg.targets[e].count; ++j) {
      ensembles[e].push_back(load_model((models_dir(cfg) / target_model_name(e, j)).string()));
    }
  }
  return ensembles;
}

void write_trace(const AttackTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open file for writing");
  for (const AttackIterate& it : trace.iterates) {
    json line;
    line["t"] = it.iteration;
    line["distance"] = it.distance;
    line["queries"] = it.queries;
    line["x_t"] = it.boundary_point;
    line["x_offset"] = it.offset_point;
    out << line.dump() << '\n';
  }
}

json variant_report_to_json(const VariantReport& v) {
  json j;
  j["expectation"] = v.expectation;
  j["mean_expectation"] = v.mean_expectation;
  j["per_source_std"] = v.per_source_std;
  j["mean_per_source_std"] = v.mean_per_source_std;
  j["overall_std"] = v.overall_std;
  return j;
}

VariantReport make_variant_report(const TransferGrid& grid, bool targeted_variant) {
  VariantReport v;
  v.expectation = grid.expectation_matrix(targeted_variant);
  v.mean_expectation = matrix_mean(v.expectation);
  const DispersionStats stats = dispersion_stats(v.expectation);
  v.per_source_std = stats.per_source_std;
  v.mean_per_source_std = stats.mean_per_source_std;
  v.overall_std = stats.overall_std;
  return v;
}

// Flattened, finite-in-both pairs of two expectation matrices.
std::pair<Vec, Vec> paired_expectations(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  Vec fa, fb;
  for (std::size_t p = 0; p < a.size() && p < b.size(); ++p) {
    for (std::size_t d = 0; d < a[p].size() && d < b[p].size(); ++d) {
      if (std::isfinite(a[p][d]) && std::isfinite(b[p][d])) {
        fa.push_back(a[p][d]);
        fb.push_back(b[p][d]);
      }
    }
  }
  return {std::move(fa), std::move(fb)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config surface.

void DatasetSpec::validate() const {
  if (!path.empty()) parse_dataset_format(format);
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("dataset: train_fraction must be in (0,1)");
  }
  if (path.empty()) {
    if (classes < 2) throw ConfigError("dataset: classes must be >= 2");
    if (feature_dim < 1) throw ConfigError("dataset: feature_dim must be >= 1");
    if (samples_per_class < 2) throw ConfigError("dataset: samples_per_class must be >= 2");
    if (!(blob_std > 0.0)) throw ConfigError("dataset: blob_std must be > 0");
  }
}

void ExperimentConfig::validate() const {
  dataset.validate();
  if (surrogates.empty() || surrogates.size() > 2) {
    throw ConfigError("config: need one or two surrogate specs");
  }
  if (targets.empty() || targets.size() > 2) {
    throw ConfigError("config: need one or two target ensembles");
  }
  for (const auto& spec : surrogates) {
    spec.validate();
    if (spec.kind == ModelKind::forest && attack.mode == AttackMode::whitebox) {
      throw ConfigError("config: whitebox attacks need a differentiable surrogate");
    }
  }
  for (const auto& ensemble : targets) {
    if (ensemble.count < 1) throw ConfigError("config: target ensemble count must be >= 1");
    ensemble.spec.validate();
  }
  if (source_count < 1) throw ConfigError("config: source_count must be >= 1");
  if (perturbations_per_source < 1) {
    throw ConfigError("config: perturbations_per_source must be >= 1");
  }
  attack.validate();
  if (!(epsilon > 0.0)) throw ConfigError("config: epsilon must be > 0");
  if (output_dir.empty()) throw ConfigError("config: output_dir must be set");
}

ExperimentConfig parse_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"root_seed", "dataset", "surrogates", "targets", "source_count",
                       "perturbations_per_source", "attack", "epsilon", "output_dir"},
                      "config");
  ExperimentConfig cfg;
  cfg.root_seed = get_field<std::uint64_t>(j, "root_seed", "config");
  if (j.contains("dataset")) cfg.dataset = parse_dataset_spec(j.at("dataset"), "config.dataset");

  const json& surrogates = j.contains("surrogates") ? j.at("surrogates") : json::array();
  if (!surrogates.is_array() || surrogates.empty()) {
    throw ConfigError("config: 'surrogates' must be a non-empty array");
  }
  cfg.surrogates.clear();
  for (std::size_t i = 0; i < surrogates.size(); ++i) {
    cfg.surrogates.push_back(
        parse_training_spec(surrogates[i], "config.surrogates[" + std::to_string(i) + "]"));
  }

  const json& targets = j.contains("targets") ? j.at("targets") : json::array();
  if (!targets.is_array() || targets.empty()) {
    throw ConfigError("config: 'targets' must be a non-empty array");
  }
  cfg.targets.clear();
  for (std::size_t e = 0; e < targets.size(); ++e) {
    const std::string where = "config.targets[" + std::to_string(e) + "]";
    reject_unknown_keys(targets[e], {"count", "spec"}, where);
    EnsembleSpec ensemble;
    ensemble.count = get_field<int>(targets[e], "count", where);
    if (ensemble.count < 1) throw ConfigError(where + ": count must be >= 1");
    if (!targets[e].contains("spec")) throw ConfigError(where + ": missing key 'spec'");
    ensemble.spec = parse_training_spec(targets[e].at("spec"), where + ".spec");
    cfg.targets.push_back(std::move(ensemble));
  }

  cfg.source_count = get_field<int>(j, "source_count", "config");
  cfg.perturbations_per_source = get_field<int>(j, "perturbations_per_source", "config");
  if (j.contains("attack")) cfg.attack = parse_attack_config(j.at("attack"), "config.attack");
  cfg.epsilon = get_field<double>(j, "epsilon", "config");
  cfg.attack.epsilon = cfg.epsilon;
  cfg.output_dir = get_field<std::string>(j, "output_dir", "config");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["root_seed"] = cfg.root_seed;
  j["dataset"] = dataset_spec_to_json(cfg.dataset);
  json surrogates = json::array();
  for (const auto& spec : cfg.surrogates) surrogates.push_back(training_spec_to_json(spec));
  j["surrogates"] = std::move(surrogates);
  json targets = json::array();
  for (const auto& ensemble : cfg.targets) {
    targets.push_back({{"count", ensemble.count}, {"spec", training_spec_to_json(ensemble.spec)}});
  }
  j["targets"] = std::move(targets);
  j["source_count"] = cfg.source_count;
  j["perturbations_per_source"] = cfg.perturbations_per_source;
  j["attack"] = attack_config_to_json(cfg.attack);
  j["epsilon"] = cfg.epsilon;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Pipeline operations.

std::pair<Dataset, Dataset> prepare_dataset(const ExperimentConfig& cfg) {
  Dataset full;
  if (cfg.dataset.path.empty()) {
    RngStream rng(cfg.root_seed, {kStreamDataset});
    full = make_blobs(cfg.dataset.classes, cfg.dataset.feature_dim, cfg.dataset.samples_per_class,
                      cfg.dataset.blob_std, rng);
  } else {
    full = load_dataset(cfg.dataset.path, parse_dataset_format(cfg.dataset.format),
                        cfg.dataset.has_header);
  }
  RngStream split_rng(cfg.root_seed, {kStreamSplit});
  return split_dataset(full, cfg.dataset.train_fraction, split_rng);
}

TrainedModels train_ensemble(const ExperimentConfig& cfg, const Dataset& train_split, int jobs) {
  cfg.validate();
  TrainedModels models;
  models.surrogates.resize(cfg.surrogates.size());
  models.ensembles.resize(cfg.targets.size());
  for (std::size_t e = 0; e < cfg.targets.size(); ++e) {
    models.ensembles[e].resize(cfg.targets[e].count);
  }

  struct Task {
    const TrainingSpec* spec;
    std::unique_ptr<Classifier>* slot;
    std::uint64_t purpose, a, b;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfg.surrogates.size(); ++i) {
    tasks.push_back({&cfg.surrogates[i], &models.surrogates[i], kStreamSurrogateTrain, i, 0});
  }
  for (std::size_t e = 0; e < cfg.targets.size(); ++e) {
    for (int j = 0; j < cfg.targets[e].count; ++j) {
      tasks.push_back({&cfg.targets[e].spec, &models.ensembles[e][j], kStreamTargetTrain, e,
                       static_cast<std::uint64_t>(j)});
    }
  }

  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    RngStream rng(cfg.root_seed, {task.purpose, task.a, task.b});
    try {
      *task.slot = train(train_split, *task.spec, rng);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (model " + std::to_string(i) + ")");
    }
  });
  return models;
}

std::vector<int> select_sources(const Dataset& test,
                                std::span<const std::unique_ptr<Classifier>> surrogates,
                                int source_count, RngStream& rng) {
  if (source_count < 1) throw InvalidArguments("select_sources: source_count must be >= 1");
  std::vector<int> eligible;
  for (std::size_t i = 0; i < test.samples.size(); ++i) {
    bool correct = true;
    for (const auto& surrogate : surrogates) {
      if (surrogate->predict_label(test.samples[i].features) != test.samples[i].label) {
        correct = false;
        break;
      }
    }
    if (correct) eligible.push_back(static_cast<int>(i));
  }
  if (static_cast<int>(eligible.size()) < source_count) {
    throw InsufficientSources("select_sources: only " + std::to_string(eligible.size()) +
                              " of the requested " + std::to_string(source_count) +
                              " correctly classified test points available");
  }
  rng.shuffle(eligible);
  eligible.resize(source_count);
  return eligible;
}

PerturbationSet generate_perturbation_set(const Classifier& surrogate,
                                          const std::string& surrogate_id, const Dataset& test,
                                          const std::vector<int>& source_indices,
                                          const ExperimentConfig& cfg, int jobs,
                                          const std::string& trace_dir) {
  const int P = static_cast<int>(source_indices.size());
  const int D = cfg.perturbations_per_source;

  PerturbationSet set;
  set.surrogate_id = surrogate_id;
  set.feature_dim = test.feature_dim;
  set.perturbations_per_source = D;
  set.source_test_indices = source_indices;
  for (int idx : source_indices) set.sources.push_back(test.samples[idx]);

  struct CellResult {
    std::optional<PerturbationRecord> record;
    std::optional<AttackFailure> failure;
    AttackTrace trace;
  };
  std::vector<CellResult> cells(static_cast<std::size_t>(P) * D);

  parallel_for(cells.size(), jobs, [&](std::size_t cell) {
    const int p = static_cast<int>(cell) / D;
    const int d = static_cast<int>(cell) % D;
    const LabeledSample& source = set.sources[p];

    AttackConfig attack = cfg.attack;
    if (attack.targeted && !attack.target_class) {
      // Shared across surrogates: matched (p, d) pairs chase the same class.
      RngStream draw(cfg.root_seed, {kStreamTargetClass, static_cast<std::uint64_t>(p),
                                     static_cast<std::uint64_t>(d)});
      const int pick =
          static_cast<int>(draw.next_below(static_cast<std::uint64_t>(surrogate.class_count() - 1)));
      attack.target_class = pick >= source.label ? pick + 1 : pick;
    }

    RngStream rng(cfg.root_seed,
                  {kStreamAttack, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(d)});
    try {
      AttackResult result = run_attack(surrogate, source, attack, test, rng, p, d);
      cells[cell].record = std::move(result.record);
      cells[cell].trace = std::move(result.trace);
    } catch (const Error& e) {
      cells[cell].failure = AttackFailure{p, d, e.what()};
    }
  });

  if (!trace_dir.empty()) fs::create_directories(trace_dir);
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    CellResult& result = cells[cell];
    if (result.record) {
      if (!trace_dir.empty()) {
        const std::string name = surrogate_id + "_p" + std::to_string(result.record->source_index) +
                                 "_d" + std::to_string(result.record->perturbation_index) +
                                 ".jsonl";
        write_trace(result.trace, (fs::path(trace_dir) / name).string());
      }
      set.records.push_back(std::move(*result.record));
    } else {
      set.failures.push_back(std::move(*result.failure));
    }
  }

  if (set.failures.size() * 2 > cells.size()) {
    throw AttackQualityError("generate_perturbation_set: " + std::to_string(set.failures.size()) +
                             " of " + std::to_string(cells.size()) + " attacks failed");
  }
  return set;
}

TransferGrid evaluate_grid(const PerturbationSet& set, const Classifier& surrogate,
                           std::span<const std::unique_ptr<Classifier>> targets, double epsilon,
                           int jobs) {
  const int P = static_cast<int>(set.sources.size());
  const int D = set.perturbations_per_source;
  const int N = static_cast<int>(targets.size());
  if (P < 1 || D < 1 || N < 1) throw InvalidArguments("evaluate_grid: empty grid");

  TransferGrid grid(P, D, N);
  grid.surrogate_id = set.surrogate_id;

  // Usable records: present and within the perturbation budget.
  std::vector<const PerturbationRecord*> usable;
  for (const auto& record : set.records) {
    if (record.l2_norm <= epsilon) {
      grid.valid[grid.pd(record.source_index, record.perturbation_index)] = 1;
      usable.push_back(&record);
    }
  }

  // The surrogate's verdict on each x' is independent of the target model.
  std::vector<int> surrogate_label_adv(usable.size());
  parallel_for(usable.size(), jobs, [&](std::size_t r) {
    surrogate_label_adv[r] = surrogate.predict_label(usable[r]->x_prime);
  });

  parallel_for(static_cast<std::size_t>(N), jobs, [&](std::size_t j) {
    const Classifier& target = *targets[j];
    std::vector<int> label_on_source(P);
    for (int p = 0; p < P; ++p) {
      label_on_source[p] = target.predict_label(set.sources[p].features);
    }
    for (std::size_t r = 0; r < usable.size(); ++r) {
      const PerturbationRecord& record = *usable[r];
      const int fT_x = label_on_source[record.source_index];
      const int fT_xp = target.predict_label(record.x_prime);
      const std::size_t cell =
          grid.cell(record.source_index, record.perturbation_index, static_cast<int>(j));
      grid.targeted[cell] = static_cast<std::uint8_t>(
          targeted_indicator(fT_x, fT_xp, surrogate_label_adv[r]));
      grid.nontargeted[cell] = static_cast<std::uint8_t>(nontargeted_indicator(
          fT_x, fT_xp, record.surrogate_label_source, surrogate_label_adv[r]));
    }
  });
  return grid;
}

// ---------------------------------------------------------------------------
// Phases.

void phase_train(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  const auto [train_split, test_split] = prepare_dataset(cfg);
  (void)test_split;
  TrainedModels models = train_ensemble(cfg, train_split, jobs);

  fs::create_directories(models_dir(cfg));
  for (std::size_t i = 0; i < models.surrogates.size(); ++i) {
    save_model(*models.surrogates[i], (models_dir(cfg) / surrogate_model_name(i)).string());
  }
  for (std::size_t e = 0; e < models.ensembles.size(); ++e) {
    for (std::size_t j = 0; j < models.ensembles[e].size(); ++j) {
      save_model(*models.ensembles[e][j],
                 (models_dir(cfg) / target_model_name(static_cast<int>(e), static_cast<int>(j)))
                     .string());
    }
  }
  update_manifest(cfg, "train");
}

void phase_attack(const ExperimentConfig& cfg, int jobs, bool trace) {
  cfg.validate();
  const auto [train_split, test_split] = prepare_dataset(cfg);
  (void)train_split;
  const auto surrogates = load_surrogates(cfg);

  RngStream source_rng(cfg.root_seed, {kStreamSourceSelect});
  const std::vector<int> sources =
      select_sources(test_split, surrogates, cfg.source_count, source_rng);

  const std::string trace_dir =
      trace ? (fs::path(cfg.output_dir) / "traces").string() : std::string();
  for (std::size_t i = 0; i < surrogates.size(); ++i) {
    const std::string surrogate_id = "s" + std::to_string(i);
    PerturbationSet set = generate_perturbation_set(*surrogates[i], surrogate_id, test_split,
                                                    sources, cfg, jobs, trace_dir);
    save_perturbation_set(set, perturbations_dir(cfg, static_cast<int>(i)).string());
  }
  update_manifest(cfg, "attack");
}

void phase_evaluate(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  const auto surrogates = load_surrogates(cfg);
  const auto ensembles = load_ensembles(cfg);

  fs::create_directories(grids_dir(cfg));
  for (std::size_t i = 0; i < surrogates.size(); ++i) {
    const PerturbationSet set =
        load_perturbation_set(perturbations_dir(cfg, static_cast<int>(i)).string());
    for (std::size_t e = 0; e < ensembles.size(); ++e) {
      const TransferGrid grid =
          evaluate_grid(set, *surrogates[i], ensembles[e], cfg.epsilon, jobs);
      const std::string suffix = grid_suffix(static_cast<int>(i), static_cast<int>(e));
      save_transfer_grid(grid, (grids_dir(cfg) / ("targeted" + suffix + ".csv")).string(),
                         (grids_dir(cfg) / ("nontargeted" + suffix + ".csv")).string());
    }
  }
  update_manifest(cfg, "evaluate");
}

MetricsReport phase_report(const ExperimentConfig& cfg) {
  cfg.validate();
  const int surrogate_count = static_cast<int>(cfg.surrogates.size());
  const int ensemble_count = static_cast<int>(cfg.targets.size());

  // grids[i][e]
  std::vector<std::vector<TransferGrid>> grids(surrogate_count);
  for (int i = 0; i < surrogate_count; ++i) {
    for (int e = 0; e < ensemble_count; ++e) {
      const std::string suffix = grid_suffix(i, e);
      grids[i].push_back(
          load_transfer_grid((grids_dir(cfg) / ("targeted" + suffix + ".csv")).string(),
                             (grids_dir(cfg) / ("nontargeted" + suffix + ".csv")).string()));
    }
  }

  MetricsReport report;
  fs::create_directories(figures_dir(cfg));
  for (int i = 0; i < surrogate_count; ++i) {
    const PerturbationSet set = load_perturbation_set(perturbations_dir(cfg, i).string());
    for (int e = 0; e < ensemble_count; ++e) {
      const TransferGrid& grid = grids[i][e];
      GridReport gr;
      gr.surrogate = i;
      gr.ensemble = e;
      gr.records_generated = static_cast<long>(set.records.size());
      gr.records_within_epsilon = static_cast<long>(
          std::count_if(set.records.begin(), set.records.end(),
                        [&](const PerturbationRecord& r) { return r.l2_norm <= cfg.epsilon; }));
      gr.attack_failures = static_cast<long>(set.failures.size());
      gr.targeted = make_variant_report(grid, true);
      gr.nontargeted = make_variant_report(grid, false);

      const std::string suffix = grid_suffix(i, e);
      emit_heatmap(gr.targeted.expectation,
                   (figures_dir(cfg) / ("heatmap_targeted" + suffix)).string());
      emit_heatmap(gr.nontargeted.expectation,
                   (figures_dir(cfg) / ("heatmap_nontargeted" + suffix)).string());
      emit_boxplot_csv(gr.targeted.expectation,
                       (figures_dir(cfg) / ("boxplot_targeted" + suffix + ".csv")).string());
      emit_boxplot_csv(gr.nontargeted.expectation,
                       (figures_dir(cfg) / ("boxplot_nontargeted" + suffix + ".csv")).string());
      report.grids.push_back(std::move(gr));
    }
  }

  if (surrogate_count == 2) {
    for (int e = 0; e < ensemble_count; ++e) {
      AgreementReport ar;
      ar.ensemble = e;
      ar.targeted = surrogate_agreement(grids[0][e], grids[1][e], true);
      ar.nontargeted = surrogate_agreement(grids[0][e], grids[1][e], false);
      report.agreement.push_back(ar);
    }
  }

  if (ensemble_count == 2) {
    for (int i = 0; i < surrogate_count; ++i) {
      CrossFamilyReport cf;
      cf.surrogate = i;
      for (bool targeted_variant : {true, false}) {
        const auto matrix_a = grids[i][0].expectation_matrix(targeted_variant);
        const auto matrix_b = grids[i][1].expectation_matrix(targeted_variant);
        const auto [fa, fb] = paired_expectations(matrix_a, matrix_b);
        std::optional<double> rho;
        if (fa.size() >= 2) {
          try {
            rho = pearson(fa, fb);
          } catch (const ZeroVarianceError&) {
            rho = std::nullopt;
          }
        }
        (targeted_variant ? cf.pearson_targeted : cf.pearson_nontargeted) = rho;
        const std::string variant_name = targeted_variant ? "targeted" : "nontargeted";
        if (!fa.empty()) {
          emit_histogram2d(histogram2d(fa, fb, 10),
                           (figures_dir(cfg) /
                            ("hist2d_" + variant_name + "_s" + std::to_string(i)))
                               .string());
        }
      }
      report.cross_family.push_back(cf);
    }
  }

  std::ofstream out(fs::path(cfg.output_dir) / "report.json", std::ios::binary);
  if (!out) throw Error(cfg.output_dir + "/report.json: cannot open file for writing");
  out << report_to_json_text(report, cfg) << '\n';
  out.close();

  update_manifest(cfg, "report");
  return report;
}

MetricsReport run_experiment(const ExperimentConfig& cfg, int jobs, bool trace) {
  phase_train(cfg, jobs);
  phase_attack(cfg, jobs, trace);
  phase_evaluate(cfg, jobs);
  return phase_report(cfg);
}

std::string report_to_json_text(const MetricsReport& report, const ExperimentConfig& cfg) {
  json j;
  j["format_version"] = 1;
  j["config"] = json::parse(config_to_json_text(cfg));

  json grids = json::array();
  for (const GridReport& gr : report.grids) {
    json g;
    g["surrogate"] = gr.surrogate;
    g["ensemble"] = gr.ensemble;
    g["records_generated"] = gr.records_generated;
    g["records_within_epsilon"] = gr.records_within_epsilon;
    g["attack_failures"] = gr.attack_failures;
    g["targeted"] = variant_report_to_json(gr.targeted);
    g["nontargeted"] = variant_report_to_json(gr.nontargeted);
    grids.push_back(std::move(g));
  }
  j["grids"] = std::move(grids);

  json agreement = json::array();
  for (const AgreementReport& ar : report.agreement) {
    json a;
    a["ensemble"] = ar.ensemble;
    a["targeted"] = {{"overall", ar.targeted.overall},
                     {"nonzero", ar.targeted.nonzero ? json(*ar.targeted.nonzero) : json(nullptr)}};
    a["nontargeted"] = {
        {"overall", ar.nontargeted.overall},
        {"nonzero", ar.nontargeted.nonzero ? json(*ar.nontargeted.nonzero) : json(nullptr)}};
    agreement.push_back(std::move(a));
  }
  j["agreement"] = std::move(agreement);

  json cross = json::array();
  for (const CrossFamilyReport& cf : report.cross_family) {
    json c;
    c["surrogate"] = cf.surrogate;
    c["pearson_targeted"] = cf.pearson_targeted ? json(*cf.pearson_targeted) : json(nullptr);
    c["pearson_nontargeted"] =
        cf.pearson_nontargeted ? json(*cf.pearson_nontargeted) : json(nullptr);
    cross.push_back(std::move(c));
  }
  j["cross_family"] = std::move(cross);

  return j.dump(2);
}

}  // namespace transferlab
