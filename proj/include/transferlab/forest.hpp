#pragma once

#include <iosfwd>

#include "transferlab/classifier.hpp"

namespace transferlab {

// One CART node. Internal nodes split on feature <= threshold; leaves carry
// a class label and have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = -1;
};

using Tree = std::vector<TreeNode>;

// Random forest of Gini-grown CART trees: bootstrap resample per tree,
// sqrt(n) feature subsampling at each split, plurality vote with ties going
// to the lowest class index. Answers hard-label queries only.
class ForestClassifier : public Classifier {
 public:
  ForestClassifier(std::vector<Tree> trees, int feature_dim, int class_count,
                   std::uint64_t train_seed);

  ModelKind kind() const override { return ModelKind::forest; }
  int class_count() const override { return class_count_; }
  int feature_dim() const override { return feature_dim_; }
  std::uint64_t train_seed() const override { return train_seed_; }
  bool differentiable() const override { return false; }

  int predict_label(std::span<const double> x) const override;
  Vec predict_logits(std::span<const double> x) const override;
  Vec boundary_gradient(std::span<const double> x, int class_a, int class_b) const override;

  void save_payload(std::ostream& out) const override;
  static std::unique_ptr<ForestClassifier> load_payload(std::istream& in, int feature_dim,
                                                        int class_count, std::uint64_t train_seed);

  const std::vector<Tree>& trees() const { return trees_; }
  int tree_vote(const Tree& tree, std::span<const double> x) const;

  static std::unique_ptr<ForestClassifier> train(const Dataset& ds, const TrainingSpec& spec,
                                                 RngStream& rng);

 private:
  std::vector<Tree> trees_;
  int feature_dim_;
  int class_count_;
  std::uint64_t train_seed_;
};

}  // namespace transferlab
