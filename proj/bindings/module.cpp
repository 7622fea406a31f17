// Python bindings for the core operations: datasets, classifiers, the
// boundary-traversal attack, transfer metrics, and the experiment pipeline.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "transferlab/attack.hpp"
#include "transferlab/classifier.hpp"
#include "transferlab/dataset.hpp"
#include "transferlab/errors.hpp"
#include "transferlab/experiment.hpp"
#include "transferlab/figures.hpp"
#include "transferlab/manifest.hpp"
#include "transferlab/metrics.hpp"
#include "transferlab/perturbation.hpp"
#include "transferlab/rng.hpp"

namespace py = pybind11;
using namespace transferlab;

namespace {

RngStream make_stream(std::uint64_t root_seed, const std::vector<std::uint64_t>& key) {
  return RngStream(root_seed, std::span<const std::uint64_t>(key.data(), key.size()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Boundary-traversal attacks and adversarial transferability metrics";

  // Library errors surface as one python exception type.
  static py::exception<Error> base_error(m, "TransferlabError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(base_error.ptr(), e.what());
    }
  });

  py::class_<RngStream>(m, "RngStream")
      .def(py::init(&make_stream), py::arg("root_seed"), py::arg("stream_key") = std::vector<std::uint64_t>{})
      .def("child", &RngStream::child)
      .def_property_readonly("derived_seed", &RngStream::derived_seed)
      .def("next_u64", &RngStream::next_u64)
      .def("next_double", &RngStream::next_double)
      .def("next_normal", &RngStream::next_normal)
      .def("next_below", &RngStream::next_below)
      .def("unit_vector", &RngStream::unit_vector);

  py::class_<LabeledSample>(m, "LabeledSample")
      .def(py::init<>())
      .def(py::init([](Vec features, int label) {
             return LabeledSample{std::move(features), label};
           }),
           py::arg("features"), py::arg("label"))
      .def_readwrite("features", &LabeledSample::features)
      .def_readwrite("label", &LabeledSample::label);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("samples", &Dataset::samples)
      .def_readwrite("class_count", &Dataset::class_count)
      .def_readwrite("feature_dim", &Dataset::feature_dim)
      .def("__len__", &Dataset::size)
      .def("validate", &Dataset::validate);

  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& format, bool has_header) {
        return load_dataset(path, parse_dataset_format(format), has_header);
      },
      py::arg("path"), py::arg("format"), py::arg("has_header") = false);
  m.def("save_dataset_csv", &save_dataset_csv, py::arg("dataset"), py::arg("path"));
  m.def("split_dataset", &split_dataset, py::arg("dataset"), py::arg("train_fraction"),
        py::arg("rng"));
  m.def("make_blobs", &make_blobs, py::arg("class_count"), py::arg("feature_dim"),
        py::arg("samples_per_class"), py::arg("blob_std"), py::arg("rng"));

  py::enum_<ModelKind>(m, "ModelKind")
      .value("linear", ModelKind::linear)
      .value("mlp", ModelKind::mlp)
      .value("forest", ModelKind::forest);

  py::class_<TrainingSpec>(m, "TrainingSpec")
      .def(py::init<>())
      .def_readwrite("kind", &TrainingSpec::kind)
      .def_readwrite("hidden_layers", &TrainingSpec::hidden_layers)
      .def_readwrite("epochs", &TrainingSpec::epochs)
      .def_readwrite("learning_rate", &TrainingSpec::learning_rate)
      .def_readwrite("batch_size", &TrainingSpec::batch_size)
      .def_readwrite("tree_count", &TrainingSpec::tree_count)
      .def_readwrite("max_depth", &TrainingSpec::max_depth)
      .def("validate", &TrainingSpec::validate);

  py::class_<Classifier>(m, "Classifier")
      .def_property_readonly("kind", &Classifier::kind)
      .def_property_readonly("class_count", &Classifier::class_count)
      .def_property_readonly("feature_dim", &Classifier::feature_dim)
      .def_property_readonly("train_seed", &Classifier::train_seed)
      .def_property_readonly("differentiable", &Classifier::differentiable)
      .def("predict_label",
           [](const Classifier& c, const Vec& x) { return c.predict_label(x); })
      .def("predict_logits",
           [](const Classifier& c, const Vec& x) { return c.predict_logits(x); })
      .def("boundary_gradient", [](const Classifier& c, const Vec& x, int a, int b) {
        return c.boundary_gradient(x, a, b);
      });

  m.def("train", &train, py::arg("dataset"), py::arg("spec"), py::arg("rng"),
        py::call_guard<py::gil_scoped_release>());
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("softmax", [](const Vec& logits) { return softmax(logits); });
  m.def("accuracy", &accuracy, py::arg("model"), py::arg("dataset"));

  py::enum_<AttackMode>(m, "AttackMode")
      .value("blackbox", AttackMode::blackbox)
      .value("whitebox", AttackMode::whitebox);

  py::class_<AttackConfig>(m, "AttackConfig")
      .def(py::init<>())
      .def_readwrite("mode", &AttackConfig::mode)
      .def_readwrite("max_iterations", &AttackConfig::max_iterations)
      .def_readwrite("bisect_tolerance", &AttackConfig::bisect_tolerance)
      .def_readwrite("mc_budget", &AttackConfig::mc_budget)
      .def_readwrite("mc_radius_scale", &AttackConfig::mc_radius_scale)
      .def_readwrite("step_shrink", &AttackConfig::step_shrink)
      .def_readwrite("epsilon", &AttackConfig::epsilon)
      .def_readwrite("targeted", &AttackConfig::targeted)
      .def_readwrite("target_class", &AttackConfig::target_class)
      .def("validate", &AttackConfig::validate);

  py::class_<AttackIterate>(m, "AttackIterate")
      .def_readonly("iteration", &AttackIterate::iteration)
      .def_readonly("boundary_point", &AttackIterate::boundary_point)
      .def_readonly("offset_point", &AttackIterate::offset_point)
      .def_readonly("distance", &AttackIterate::distance)
      .def_readonly("queries", &AttackIterate::queries);

  py::class_<AttackTrace>(m, "AttackTrace")
      .def_readonly("iterates", &AttackTrace::iterates)
      .def_readonly("total_queries", &AttackTrace::total_queries);

  py::class_<PerturbationRecord>(m, "PerturbationRecord")
      .def_readonly("source_index", &PerturbationRecord::source_index)
      .def_readonly("perturbation_index", &PerturbationRecord::perturbation_index)
      .def_readonly("x_prime", &PerturbationRecord::x_prime)
      .def_readonly("delta", &PerturbationRecord::delta)
      .def_readonly("l2_norm", &PerturbationRecord::l2_norm)
      .def_readonly("surrogate_label_source", &PerturbationRecord::surrogate_label_source)
      .def_readonly("surrogate_label_adv", &PerturbationRecord::surrogate_label_adv)
      .def_readonly("target_class", &PerturbationRecord::target_class)
      .def_readonly("seed", &PerturbationRecord::seed);

  py::class_<AttackResult>(m, "AttackResult")
      .def_readonly("record", &AttackResult::record)
      .def_readonly("trace", &AttackResult::trace);

  m.def("find_initial_adversarial", &find_initial_adversarial, py::arg("surrogate"),
        py::arg("source"), py::arg("config"), py::arg("candidates"), py::arg("rng"));
  m.def(
      "boundary_bisect",
      [](const Classifier& surrogate, const Vec& x, const Vec& x_adv, double tolerance) {
        return boundary_bisect(surrogate, x, x_adv, tolerance);
      },
      py::arg("surrogate"), py::arg("x"), py::arg("x_adv"), py::arg("tolerance"));
  m.def(
      "mc_normal_estimate",
      [](const Classifier& surrogate, const Vec& boundary_point, int budget, double radius,
         RngStream& rng, int source_label) {
        return mc_normal_estimate(surrogate, boundary_point, budget, radius, rng, source_label);
      },
      py::arg("surrogate"), py::arg("boundary_point"), py::arg("budget"), py::arg("radius"),
      py::arg("rng"), py::arg("source_label"));
  m.def(
      "whitebox_normal",
      [](const Classifier& surrogate, const Vec& boundary_point, int source_label, int adv_label) {
        return whitebox_normal(surrogate, boundary_point, source_label, adv_label);
      },
      py::arg("surrogate"), py::arg("boundary_point"), py::arg("source_label"),
      py::arg("adv_label"));
  m.def(
      "perpendicular_step",
      [](const Vec& boundary_point, const Vec& normal, const Vec& source, double step_size,
         const Classifier& surrogate, double step_shrink) {
        return perpendicular_step(boundary_point, normal, source, step_size, surrogate,
                                  step_shrink);
      },
      py::arg("boundary_point"), py::arg("normal"), py::arg("source"), py::arg("step_size"),
      py::arg("surrogate"), py::arg("step_shrink") = 0.5);
  m.def("run_attack", &run_attack, py::arg("surrogate"), py::arg("source"), py::arg("config"),
        py::arg("candidates"), py::arg("rng"), py::arg("source_index") = 0,
        py::arg("perturbation_index") = 0, py::call_guard<py::gil_scoped_release>());

  m.def(
      "is_adversarial",
      [](const Classifier& f, const Vec& x, const Vec& x_prime, double epsilon) {
        return is_adversarial(f, x, x_prime, epsilon);
      },
      py::arg("model"), py::arg("x"), py::arg("x_prime"), py::arg("epsilon"));
  m.def("targeted_indicator", &targeted_indicator, py::arg("target_label_source"),
        py::arg("target_label_adv"), py::arg("surrogate_label_adv"));
  m.def("nontargeted_indicator", &nontargeted_indicator, py::arg("target_label_source"),
        py::arg("target_label_adv"), py::arg("surrogate_label_source"),
        py::arg("surrogate_label_adv"));
  m.def("transfer_expectation",
        [](const std::vector<int>& indicators) { return transfer_expectation(indicators); });

  py::class_<DispersionStats>(m, "DispersionStats")
      .def_readonly("per_source_std", &DispersionStats::per_source_std)
      .def_readonly("mean_per_source_std", &DispersionStats::mean_per_source_std)
      .def_readonly("overall_std", &DispersionStats::overall_std);
  m.def("dispersion_stats", &dispersion_stats, py::arg("expectation"));

  py::class_<TransferGrid>(m, "TransferGrid")
      .def_readonly("source_count", &TransferGrid::source_count)
      .def_readonly("perturbations_per_source", &TransferGrid::perturbations_per_source)
      .def_readonly("target_count", &TransferGrid::target_count)
      .def_readonly("surrogate_id", &TransferGrid::surrogate_id)
      .def("is_valid", &TransferGrid::is_valid)
      .def("targeted_at",
           [](const TransferGrid& g, int p, int d, int j) { return int(g.targeted[g.cell(p, d, j)]); })
      .def("nontargeted_at",
           [](const TransferGrid& g, int p, int d, int j) {
             return int(g.nontargeted[g.cell(p, d, j)]);
           })
      .def("expectation_matrix", &TransferGrid::expectation_matrix, py::arg("targeted"));

  py::class_<AgreementResult>(m, "AgreementResult")
      .def_readonly("overall", &AgreementResult::overall)
      .def_readonly("nonzero", &AgreementResult::nonzero);
  m.def("surrogate_agreement", &surrogate_agreement, py::arg("grid_a"), py::arg("grid_b"),
        py::arg("targeted"));

  m.def("pearson", [](const Vec& a, const Vec& b) { return pearson(a, b); });
  m.def(
      "histogram2d",
      [](const Vec& a, const Vec& b, int bins) { return histogram2d(a, b, bins); },
      py::arg("a"), py::arg("b"), py::arg("bins"));
  m.def("quantile", &quantile, py::arg("sorted_values"), py::arg("q"));

  py::class_<DatasetSpec>(m, "DatasetSpec")
      .def(py::init<>())
      .def_readwrite("path", &DatasetSpec::path)
      .def_readwrite("format", &DatasetSpec::format)
      .def_readwrite("has_header", &DatasetSpec::has_header)
      .def_readwrite("train_fraction", &DatasetSpec::train_fraction)
      .def_readwrite("classes", &DatasetSpec::classes)
      .def_readwrite("feature_dim", &DatasetSpec::feature_dim)
      .def_readwrite("samples_per_class", &DatasetSpec::samples_per_class)
      .def_readwrite("blob_std", &DatasetSpec::blob_std);

  py::class_<EnsembleSpec>(m, "EnsembleSpec")
      .def(py::init<>())
      .def_readwrite("count", &EnsembleSpec::count)
      .def_readwrite("spec", &EnsembleSpec::spec);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("root_seed", &ExperimentConfig::root_seed)
      .def_readwrite("dataset", &ExperimentConfig::dataset)
      .def_readwrite("surrogates", &ExperimentConfig::surrogates)
      .def_readwrite("targets", &ExperimentConfig::targets)
      .def_readwrite("source_count", &ExperimentConfig::source_count)
      .def_readwrite("perturbations_per_source", &ExperimentConfig::perturbations_per_source)
      .def_readwrite("attack", &ExperimentConfig::attack)
      .def_readwrite("epsilon", &ExperimentConfig::epsilon)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def("validate", &ExperimentConfig::validate);

  m.def("parse_config_text", &parse_config_text, py::arg("json_text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("config_to_json_text", &config_to_json_text, py::arg("config"));

  m.def(
      "run_experiment",
      [](const ExperimentConfig& cfg, int jobs, bool trace) {
        MetricsReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg, jobs, trace);
        }
        return report_to_json_text(report, cfg);
      },
      py::arg("config"), py::arg("jobs") = 1, py::arg("trace") = false,
      "Runs all phases; returns the report as a JSON string.");
  m.def("phase_train", &phase_train, py::arg("config"), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("phase_attack", &phase_attack, py::arg("config"), py::arg("jobs") = 1,
        py::arg("trace") = false, py::call_guard<py::gil_scoped_release>());
  m.def("phase_evaluate", &phase_evaluate, py::arg("config"), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "phase_report",
      [](const ExperimentConfig& cfg) {
        MetricsReport report;
        {
          py::gil_scoped_release release;
          report = phase_report(cfg);
        }
        return report_to_json_text(report, cfg);
      },
      py::arg("config"));

  m.def("verify_manifest", [](const std::string& dir) {
    const ManifestCheck check = verify_manifest(dir);
    return py::make_tuple(check.ok, check.problems);
  });
}
