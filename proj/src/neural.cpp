#include "transferlab/neural.hpp"

#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "transferlab/errors.hpp"

namespace transferlab {

NeuralClassifier::NeuralClassifier(int feature_dim, int class_count, std::vector<int> hidden_widths,
                                   std::uint64_t train_seed)
    : feature_dim_(feature_dim),
      class_count_(class_count),
      hidden_widths_(std::move(hidden_widths)),
      train_seed_(train_seed) {
  if (feature_dim_ < 1 || class_count_ < 2) {
    throw InvalidArguments("neural classifier: need feature_dim >= 1 and class_count >= 2");
  }
  for (int w : hidden_widths_) {
    if (w < 1) throw InvalidArguments("neural classifier: hidden widths must be >= 1");
  }
  const std::size_t layers = hidden_widths_.size() + 1;
  weights_.resize(layers);
  biases_.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    weights_[l].assign(static_cast<std::size_t>(layer_out(l)) * layer_in(l), 0.0);
    biases_[l].assign(layer_out(l), 0.0);
  }
}

int NeuralClassifier::layer_in(std::size_t layer) const {
  return layer == 0 ? feature_dim_ : hidden_widths_[layer - 1];
}

int NeuralClassifier::layer_out(std::size_t layer) const {
  return layer == hidden_widths_.size() ? class_count_ : hidden_widths_[layer];
}

void NeuralClassifier::set_layer(std::size_t layer, Vec weights, Vec biases) {
  if (layer >= weights_.size()) throw InvalidArguments("set_layer: no such layer");
  if (weights.size() != static_cast<std::size_t>(layer_out(layer)) * layer_in(layer) ||
      biases.size() != static_cast<std::size_t>(layer_out(layer))) {
    throw DimensionError("set_layer: parameter shape mismatch");
  }
  weights_[layer] = std::move(weights);
  biases_[layer] = std::move(biases);
}

Vec NeuralClassifier::forward(std::span<const double> x, std::vector<Vec>* pre_activations) const {
  if (static_cast<int>(x.size()) != feature_dim_) {
    throw DimensionError("predict: input has " + std::to_string(x.size()) +
                         " components, expected " + std::to_string(feature_dim_));
  }
  Vec activation(x.begin(), x.end());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const int out_n = layer_out(l);
    const int in_n = layer_in(l);
    Vec z(out_n);
    const double* w = weights_[l].data();
    for (int o = 0; o < out_n; ++o) {
      double acc = biases_[l][o];
      const double* row = w + static_cast<std::size_t>(o) * in_n;
      for (int i = 0; i < in_n; ++i) acc += row[i] * activation[i];
      z[o] = acc;
    }
    if (pre_activations) pre_activations->push_back(z);
    if (l + 1 == weights_.size()) return z;
    activation.assign(out_n, 0.0);
    for (int o = 0; o < out_n; ++o) activation[o] = z[o] > 0.0 ? z[o] : 0.0;
  }
  return activation;  // unreachable: at least one layer exists
}

int NeuralClassifier::predict_label(std::span<const double> x) const {
  const Vec logits = forward(x, nullptr);
  return argmax(logits);
}

Vec NeuralClassifier::predict_logits(std::span<const double> x) const {
  return forward(x, nullptr);
}

Vec NeuralClassifier::boundary_gradient(std::span<const double> x, int class_a, int class_b) const {
  if (class_a == class_b) {
    throw InvalidArguments("boundary_gradient: class_a and class_b must differ");
  }
  if (class_a < 0 || class_a >= class_count_ || class_b < 0 || class_b >= class_count_) {
    throw InvalidArguments("boundary_gradient: class index out of range");
  }
  std::vector<Vec> pre;
  pre.reserve(weights_.size());
  forward(x, &pre);

  // Backpropagate d(logit_a - logit_b)/dz through the linear/ReLU stack.
  const std::size_t last = weights_.size() - 1;
  Vec dz(class_count_, 0.0);
  dz[class_a] = 1.0;
  dz[class_b] = -1.0;
  for (std::size_t l = last;; --l) {
    const int out_n = layer_out(l);
    const int in_n = layer_in(l);
    Vec din(in_n, 0.0);
    const double* w = weights_[l].data();
    for (int o = 0; o < out_n; ++o) {
      const double g = dz[o];
      if (g == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * in_n;
      for (int i = 0; i < in_n; ++i) din[i] += g * row[i];
    }
    if (l == 0) return din;
    const Vec& z_prev = pre[l - 1];
    for (int i = 0; i < in_n; ++i) {
      if (z_prev[i] <= 0.0) din[i] = 0.0;  // ReLU'(0) := 0
    }
    dz = std::move(din);
  }
}

double NeuralClassifier::mean_loss(const Dataset& ds) const {
  double total = 0.0;
  for (const auto& s : ds.samples) {
    const Vec logits = forward(s.features, nullptr);
    const Vec p = softmax(logits);
    total += -std::log(p[s.label]);
  }
  return total / static_cast<double>(ds.samples.size());
}

std::unique_ptr<NeuralClassifier> NeuralClassifier::train(const Dataset& ds,
                                                          const TrainingSpec& spec,
                                                          RngStream& rng) {
  if (ds.samples.empty()) throw InvalidArguments("train: dataset is empty");
  spec.validate();

  std::vector<int> hidden = spec.kind == ModelKind::mlp ? spec.hidden_layers : std::vector<int>{};
  auto model = std::make_unique<NeuralClassifier>(ds.feature_dim, ds.class_count, hidden,
                                                  rng.derived_seed());

  // Glorot-uniform initialization, fully determined by the stream.
  for (std::size_t l = 0; l < model->weights_.size(); ++l) {
    const double fan_in = model->layer_in(l);
    const double fan_out = model->layer_out(l);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : model->weights_[l]) w = (2.0 * rng.next_double() - 1.0) * limit;
  }

  const std::size_t n = ds.samples.size();
  const std::size_t batch = std::min<std::size_t>(std::max(spec.batch_size, 1), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t layers = model->weights_.size();
  std::vector<Vec> grad_w(layers), grad_b(layers);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const double batch_n = static_cast<double>(stop - start);
      for (std::size_t l = 0; l < layers; ++l) {
        grad_w[l].assign(model->weights_[l].size(), 0.0);
        grad_b[l].assign(model->biases_[l].size(), 0.0);
      }
      double batch_loss = 0.0;
      for (std::size_t idx = start; idx < stop; ++idx) {
        const LabeledSample& sample = ds.samples[order[idx]];
        std::vector<Vec> pre;
        pre.reserve(layers);
        const Vec logits = model->forward(sample.features, &pre);
        const Vec p = softmax(logits);
        batch_loss += -std::log(p[sample.label]);

        Vec dz = p;
        dz[sample.label] -= 1.0;
        for (std::size_t l = layers - 1;; --l) {
          const int out_n = model->layer_out(l);
          const int in_n = model->layer_in(l);
          // Input activation of layer l.
          const double* a_in;
          Vec relu_buf;
          if (l == 0) {
            a_in = sample.features.data();
          } else {
            relu_buf.resize(in_n);
            const Vec& z_prev = pre[l - 1];
            for (int i = 0; i < in_n; ++i) relu_buf[i] = z_prev[i] > 0.0 ? z_prev[i] : 0.0;
            a_in = relu_buf.data();
          }
          double* gw = grad_w[l].data();
          for (int o = 0; o < out_n; ++o) {
            const double g = dz[o];
            grad_b[l][o] += g;
            if (g == 0.0) continue;
            double* row = gw + static_cast<std::size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) row[i] += g * a_in[i];
          }
          if (l == 0) break;
          Vec din(in_n, 0.0);
          const double* w = model->weights_[l].data();
          for (int o = 0; o < out_n; ++o) {
            const double g = dz[o];
            if (g == 0.0) continue;
            const double* row = w + static_cast<std::size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) din[i] += g * row[i];
          }
          const Vec& z_prev = pre[l - 1];
          for (int i = 0; i < in_n; ++i) {
            if (z_prev[i] <= 0.0) din[i] = 0.0;
          }
          dz = std::move(din);
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              "; lower the learning rate");
      }
      const double scale = spec.learning_rate / batch_n;
      for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t i = 0; i < grad_w[l].size(); ++i) model->weights_[l][i] -= scale * grad_w[l][i];
        for (std::size_t i = 0; i < grad_b[l].size(); ++i) model->biases_[l][i] -= scale * grad_b[l][i];
      }
    }
  }

  for (std::size_t l = 0; l < layers; ++l) {
    if (!all_finite(model->weights_[l]) || !all_finite(model->biases_[l])) {
      throw DivergenceError("train: non-finite parameters after training; lower the learning rate");
    }
  }
  return model;
}

void NeuralClassifier::save_payload(std::ostream& out) const {
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(hidden_widths_.size()));
  for (int w : hidden_widths_) detail::write_le<std::int32_t>(out, w);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (double w : weights_[l]) detail::write_le<double>(out, w);
    for (double b : biases_[l]) detail::write_le<double>(out, b);
  }
}

std::unique_ptr<NeuralClassifier> NeuralClassifier::load_payload(std::istream& in, int feature_dim,
                                                                 int class_count,
                                                                 std::uint64_t train_seed) {
  const std::uint32_t hidden_count = detail::read_le<std::uint32_t>(in);
  if (hidden_count > 64) throw FormatError("model file: implausible hidden layer count");
  std::vector<int> hidden(hidden_count);
  for (auto& w : hidden) {
    w = detail::read_le<std::int32_t>(in);
    if (w < 1) throw FormatError("model file: invalid hidden width");
  }
  auto model = std::make_unique<NeuralClassifier>(feature_dim, class_count, hidden, train_seed);
  for (std::size_t l = 0; l < model->weights_.size(); ++l) {
    for (double& w : model->weights_[l]) w = detail::read_le<double>(in);
    for (double& b : model->biases_[l]) b = detail::read_le<double>(in);
  }
  return model;
}

}  // namespace transferlab
