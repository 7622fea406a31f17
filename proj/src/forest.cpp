#include "transferlab/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "transferlab/errors.hpp"

namespace transferlab {

namespace {

constexpr double kMinGiniGain = 1e-12;

int majority_label(const std::vector<int>& counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = static_cast<int>(c);
  }
  return best;
}

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double acc = 0.0;
  for (int c : counts) {
    const double f = static_cast<double>(c) / total;
    acc += f * f;
  }
  return 1.0 - acc;
}

struct TreeBuilder {
  const Dataset& ds;
  const TrainingSpec& spec;
  RngStream& rng;
  Tree nodes;
  int feature_sample_count;

  int build(std::vector<int>& indices, int begin, int end, int depth) {
    const int node_idx = static_cast<int>(nodes.size());
    nodes.emplace_back();

    std::vector<int> counts(ds.class_count, 0);
    for (int i = begin; i < end; ++i) counts[ds.samples[indices[i]].label]++;
    const int total = end - begin;
    const int majority = majority_label(counts);
    const bool pure = counts[majority] == total;

    if (depth >= spec.max_depth || pure || total < 2) {
      nodes[node_idx].label = majority;
      return node_idx;
    }

    // Partial Fisher-Yates over the feature indices; evaluation order is
    // part of determinism, so candidates keep their sampled order.
    std::vector<int> features(ds.feature_dim);
    std::iota(features.begin(), features.end(), 0);
    for (int k = 0; k < feature_sample_count; ++k) {
      const std::size_t j = k + rng.next_below(features.size() - k);
      std::swap(features[k], features[j]);
    }

    const double parent_gini = gini(counts, total);
    double best_gain = kMinGiniGain;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, int>> values(total);
    for (int f_idx = 0; f_idx < feature_sample_count; ++f_idx) {
      const int feature = features[f_idx];
      for (int i = begin; i < end; ++i) {
        const int s = indices[i];
        values[i - begin] = {ds.samples[s].features[feature], ds.samples[s].label};
      }
      std::sort(values.begin(), values.end());
      if (values.front().first == values.back().first) continue;

      std::vector<int> left_counts(ds.class_count, 0);
      std::vector<int> right_counts = counts;
      for (int i = 0; i + 1 < total; ++i) {
        const auto& [value, label] = values[i];
        left_counts[label]++;
        right_counts[label]--;
        if (value == values[i + 1].first) continue;
        const int nl = i + 1;
        const int nr = total - nl;
        const double gain = parent_gini - (nl * gini(left_counts, nl) +
                                           nr * gini(right_counts, nr)) / total;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = feature;
          best_threshold = 0.5 * (value + values[i + 1].first);
        }
      }
    }

    if (best_feature < 0) {
      nodes[node_idx].label = majority;
      return node_idx;
    }

    const auto mid_it = std::stable_partition(
        indices.begin() + begin, indices.begin() + end,
        [&](int s) { return ds.samples[s].features[best_feature] <= best_threshold; });
    const int mid = static_cast<int>(mid_it - indices.begin());
    // A midpoint between two distinct values always separates them.
    const int left = build(indices, begin, mid, depth + 1);
    const int right = build(indices, mid, end, depth + 1);
    nodes[node_idx].feature = best_feature;
    nodes[node_idx].threshold = best_threshold;
    nodes[node_idx].left = left;
    nodes[node_idx].right = right;
    nodes[node_idx].label = -1;
    return node_idx;
  }
};

}  // namespace

ForestClassifier::ForestClassifier(std::vector<Tree> trees, int feature_dim, int class_count,
                                   std::uint64_t train_seed)
    : trees_(std::move(trees)),
      feature_dim_(feature_dim),
      class_count_(class_count),
      train_seed_(train_seed) {
  if (trees_.empty()) throw InvalidArguments("forest: need at least one tree");
}

int ForestClassifier::tree_vote(const Tree& tree, std::span<const double> x) const {
  int node = 0;
  while (tree[node].feature >= 0) {
    node = x[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right;
  }
  return tree[node].label;
}

int ForestClassifier::predict_label(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != feature_dim_) {
    throw DimensionError("predict: input has " + std::to_string(x.size()) +
                         " components, expected " + std::to_string(feature_dim_));
  }
  std::vector<int> votes(class_count_, 0);
  for (const Tree& tree : trees_) votes[tree_vote(tree, x)]++;
  int best = 0;
  for (int c = 1; c < class_count_; ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return best;
}

Vec ForestClassifier::predict_logits(std::span<const double>) const {
  throw UnsupportedOperation("forest models answer label queries only");
}

Vec ForestClassifier::boundary_gradient(std::span<const double>, int, int) const {
  throw UnsupportedOperation("forest models answer label queries only");
}

std::unique_ptr<ForestClassifier> ForestClassifier::train(const Dataset& ds,
                                                          const TrainingSpec& spec,
                                                          RngStream& rng) {
  if (ds.samples.empty()) throw InvalidArguments("train: dataset is empty");
  spec.validate();

  const int n = static_cast<int>(ds.samples.size());
  std::vector<Tree> trees;
  trees.reserve(spec.tree_count);
  for (int t = 0; t < spec.tree_count; ++t) {
    RngStream tree_rng = rng.child(static_cast<std::uint64_t>(t));
    std::vector<int> bootstrap(n);
    for (int i = 0; i < n; ++i) {
      bootstrap[i] = static_cast<int>(tree_rng.next_below(static_cast<std::uint64_t>(n)));
    }
    TreeBuilder builder{
        ds, spec, tree_rng, {},
        std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(ds.feature_dim)))))};
    builder.build(bootstrap, 0, n, 0);
    trees.push_back(std::move(builder.nodes));
  }
  return std::make_unique<ForestClassifier>(std::move(trees), ds.feature_dim, ds.class_count,
                                            rng.derived_seed());
}

void ForestClassifier::save_payload(std::ostream& out) const {
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(trees_.size()));
  for (const Tree& tree : trees_) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.size()));
    for (const TreeNode& node : tree) {
      detail::write_le<std::int32_t>(out, node.feature);
      detail::write_le<double>(out, node.threshold);
      detail::write_le<std::int32_t>(out, node.left);
      detail::write_le<std::int32_t>(out, node.right);
      detail::write_le<std::int32_t>(out, node.label);
    }
  }
}

std::unique_ptr<ForestClassifier> ForestClassifier::load_payload(std::istream& in, int feature_dim,
                                                                 int class_count,
                                                                 std::uint64_t train_seed) {
  const std::uint32_t tree_count = detail::read_le<std::uint32_t>(in);
  if (tree_count == 0 || tree_count > 1'000'000) {
    throw FormatError("model file: implausible tree count");
  }
  std::vector<Tree> trees(tree_count);
  for (Tree& tree : trees) {
    const std::uint32_t node_count = detail::read_le<std::uint32_t>(in);
    if (node_count == 0 || node_count > 100'000'000) {
      throw FormatError("model file: implausible node count");
    }
    tree.resize(node_count);
    for (TreeNode& node : tree) {
      node.feature = detail::read_le<std::int32_t>(in);
      node.threshold = detail::read_le<double>(in);
      node.left = detail::read_le<std::int32_t>(in);
      node.right = detail::read_le<std::int32_t>(in);
      node.label = detail::read_le<std::int32_t>(in);
      if (node.feature >= feature_dim ||
          (node.feature >= 0 && (node.left < 0 || node.right < 0 ||
                                 node.left >= static_cast<int>(node_count) ||
                                 node.right >= static_cast<int>(node_count))) ||
          (node.feature < 0 && (node.label < 0 || node.label >= class_count))) {
        throw FormatError("model file: malformed tree node");
      }
    }
  }
  return std::make_unique<ForestClassifier>(std::move(trees), feature_dim, class_count, train_seed);
}

}  // namespace transferlab
