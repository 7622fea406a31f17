#pragma once

#include <iosfwd>

#include "transferlab/classifier.hpp"

namespace transferlab {

// Fully connected ReLU network with a linear output layer, trained from
// scratch with plain mini-batch gradient descent on softmax cross-entropy.
// An empty hidden layout gives the linear (softmax regression) model.
class NeuralClassifier : public Classifier {
 public:
  NeuralClassifier(int feature_dim, int class_count, std::vector<int> hidden_widths,
                   std::uint64_t train_seed);

  ModelKind kind() const override {
    return hidden_widths_.empty() ? ModelKind::linear : ModelKind::mlp;
  }
  int class_count() const override { return class_count_; }
  int feature_dim() const override { return feature_dim_; }
  std::uint64_t train_seed() const override { return train_seed_; }
  bool differentiable() const override { return true; }

  int predict_label(std::span<const double> x) const override;
  Vec predict_logits(std::span<const double> x) const override;
  Vec boundary_gradient(std::span<const double> x, int class_a, int class_b) const override;

  void save_payload(std::ostream& out) const override;
  static std::unique_ptr<NeuralClassifier> load_payload(std::istream& in, int feature_dim,
                                                        int class_count, std::uint64_t train_seed);

  // Layer l maps width(l-1) -> width(l); weights are row-major (out x in).
  // Exposed for tests and for building models with pinned parameters.
  void set_layer(std::size_t layer, Vec weights, Vec biases);
  const std::vector<Vec>& weights() const { return weights_; }
  const std::vector<Vec>& biases() const { return biases_; }
  const std::vector<int>& hidden_widths() const { return hidden_widths_; }

  // Mean softmax cross-entropy over a dataset.
  double mean_loss(const Dataset& ds) const;

  static std::unique_ptr<NeuralClassifier> train(const Dataset& ds, const TrainingSpec& spec,
                                                 RngStream& rng);

 private:
  int layer_in(std::size_t layer) const;
  int layer_out(std::size_t layer) const;
  // Forward pass keeping pre-activations per layer; returns logits.
  Vec forward(std::span<const double> x, std::vector<Vec>* pre_activations) const;

  int feature_dim_;
  int class_count_;
  std::vector<int> hidden_widths_;
  std::vector<Vec> weights_;  // one row-major matrix per layer
  std::vector<Vec> biases_;
  std::uint64_t train_seed_;
};

}  // namespace transferlab
