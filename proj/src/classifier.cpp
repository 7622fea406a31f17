#include "transferlab/classifier.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "transferlab/errors.hpp"
#include "transferlab/forest.hpp"
#include "transferlab/neural.hpp"

namespace transferlab {

namespace {

constexpr std::uint32_t kModelMagic = 0x544C4D44;  // "TLMD"
constexpr std::uint32_t kModelVersion = 1;

std::uint8_t kind_tag(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return 0;
    case ModelKind::mlp: return 1;
    case ModelKind::forest: return 2;
  }
  throw InvalidArguments("unknown model kind");
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return "linear";
    case ModelKind::mlp: return "mlp";
    case ModelKind::forest: return "forest";
  }
  throw InvalidArguments("unknown model kind");
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "linear") return ModelKind::linear;
  if (name == "mlp") return ModelKind::mlp;
  if (name == "forest") return ModelKind::forest;
  throw InvalidArguments("unknown model kind: '" + name + "'");
}

void TrainingSpec::validate() const {
  if (epochs < 1) throw InvalidArguments("training spec: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArguments("training spec: learning_rate must be > 0");
  if (batch_size < 1) throw InvalidArguments("training spec: batch_size must be >= 1");
  for (int w : hidden_layers) {
    if (w < 1) throw InvalidArguments("training spec: hidden widths must be >= 1");
  }
  if (kind == ModelKind::mlp && hidden_layers.empty()) {
    throw InvalidArguments("training spec: mlp needs at least one hidden layer");
  }
  if (kind == ModelKind::forest) {
    if (tree_count < 1) throw InvalidArguments("training spec: tree_count must be >= 1");
    if (max_depth < 1) throw InvalidArguments("training spec: max_depth must be >= 1");
  }
}

std::unique_ptr<Classifier> train(const Dataset& ds, const TrainingSpec& spec, RngStream& rng) {
  if (spec.kind == ModelKind::forest) return ForestClassifier::train(ds, spec, rng);
  return NeuralClassifier::train(ds, spec, rng);
}

void save_model(const Classifier& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  detail::write_le<std::uint32_t>(out, kModelMagic);
  detail::write_le<std::uint32_t>(out, kModelVersion);
  detail::write_le<std::uint8_t>(out, kind_tag(model.kind()));
  detail::write_le<std::int32_t>(out, model.class_count());
  detail::write_le<std::int32_t>(out, model.feature_dim());
  detail::write_le<std::uint64_t>(out, model.train_seed());
  model.save_payload(out);
  if (!out) throw FormatError(path + ": write failed");
}

std::unique_ptr<Classifier> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  try {
    const std::uint32_t magic = detail::read_le<std::uint32_t>(in);
    if (magic != kModelMagic) throw FormatError("not a model file");
    const std::uint32_t version = detail::read_le<std::uint32_t>(in);
    if (version != kModelVersion) {
      throw FormatError("unsupported model version " + std::to_string(version));
    }
    const std::uint8_t tag = detail::read_le<std::uint8_t>(in);
    const std::int32_t class_count = detail::read_le<std::int32_t>(in);
    const std::int32_t feature_dim = detail::read_le<std::int32_t>(in);
    const std::uint64_t seed = detail::read_le<std::uint64_t>(in);
    if (class_count < 2 || feature_dim < 1) throw FormatError("malformed header");
    switch (tag) {
      case 0:
      case 1:
        return NeuralClassifier::load_payload(in, feature_dim, class_count, seed);
      case 2:
        return ForestClassifier::load_payload(in, feature_dim, class_count, seed);
      default:
        throw FormatError("unknown model kind tag");
    }
  } catch (const FormatError& e) {
    // Truncation errors from the readers carry no file name; add it once.
    throw FormatError(path + ": " + e.what());
  }
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArguments("softmax: empty logits");
  double max_logit = logits[0];
  for (double z : logits) max_logit = std::max(max_logit, z);
  Vec p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double accuracy(const Classifier& model, const Dataset& ds) {
  if (ds.samples.empty()) throw InvalidArguments("accuracy: dataset is empty");
  std::size_t hits = 0;
  for (const auto& s : ds.samples) {
    if (model.predict_label(s.features) == s.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.samples.size());
}

}  // namespace transferlab
