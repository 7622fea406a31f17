#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "transferlab/common.hpp"
#include "transferlab/dataset.hpp"
#include "transferlab/rng.hpp"

namespace transferlab {

enum class ModelKind { linear, mlp, forest };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct TrainingSpec {
  ModelKind kind = ModelKind::mlp;
  std::vector<int> hidden_layers = {32};  // mlp only
  int epochs = 10;
  double learning_rate = 0.1;
  int batch_size = 32;
  int tree_count = 20;  // forest only
  int max_depth = 10;   // forest only

  void validate() const;
};

// Hard-label prediction, class logits, and analytic boundary gradients behind
// one contract. Trained models are immutable; concurrent queries are safe.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelKind kind() const = 0;
  virtual int class_count() const = 0;
  virtual int feature_dim() const = 0;
  virtual std::uint64_t train_seed() const = 0;
  virtual bool differentiable() const = 0;

  virtual int predict_label(std::span<const double> x) const = 0;

  // Pre-softmax activations. Forests raise UnsupportedOperation.
  virtual Vec predict_logits(std::span<const double> x) const = 0;

  // Gradient of g(x) = logit_a(x) - logit_b(x), whose zero set is the a/b
  // decision boundary. Forests raise UnsupportedOperation.
  virtual Vec boundary_gradient(std::span<const double> x, int class_a, int class_b) const = 0;

  // Kind-specific payload; the framing header is written by save_model.
  virtual void save_payload(std::ostream& out) const = 0;
};

// Dispatches on spec.kind; deterministic given (ds, spec, rng).
std::unique_ptr<Classifier> train(const Dataset& ds, const TrainingSpec& spec, RngStream& rng);

// Versioned binary container; load(save(m)) reproduces identical predictions.
void save_model(const Classifier& model, const std::string& path);
std::unique_ptr<Classifier> load_model(const std::string& path);

// Numerically stable softmax; output sums to 1 and is strictly positive.
Vec softmax(std::span<const double> logits);

double accuracy(const Classifier& model, const Dataset& ds);

}  // namespace transferlab
