#pragma once

#include <string>
#include <utility>
#include <vector>

#include "transferlab/common.hpp"
#include "transferlab/rng.hpp"

namespace transferlab {

// One feature vector in [0,1]^n with its ground-truth class label.
struct LabeledSample {
  Vec features;
  int label = 0;
};

enum class DatasetFormat { csv, idx };

DatasetFormat parse_dataset_format(const std::string& name);
std::string to_string(DatasetFormat format);

// Immutable after construction; safe to share across threads for reads.
struct Dataset {
  std::vector<LabeledSample> samples;
  int class_count = 0;
  int feature_dim = 0;

  std::size_t size() const { return samples.size(); }

  // Throws DimensionError / InvalidArguments when an invariant is broken:
  // per-sample dimension, feature range, label range.
  void validate() const;
};

// CSV: first column integer label, remaining columns either integer 0-255
// (scaled by 1/255) or real values already in [0,1]; a file is treated as
// byte-valued only when every feature token in it is an integer.
// IDX: `path` names the big-endian image file (magic 0x00000803); the label
// file (magic 0x00000801) is located by the conventional images->labels /
// idx3->idx1 renaming.
Dataset load_dataset(const std::string& path, DatasetFormat format, bool has_header = false);

// Writes features as shortest round-trip reals, so load(save(ds)) is
// bit-exact.
void save_dataset_csv(const Dataset& ds, const std::string& path);

// Deterministic shuffle under `rng`, then a train/test cut at
// round(train_fraction * size). Splits are disjoint and exhaustive; throws
// StratificationError if any class present in `ds` is missing from the
// train split.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, RngStream& rng);

// Gaussian blob mixture: one spherical blob per class, means drawn uniformly
// in [0.2, 0.8]^dim, samples clipped into [0,1]. The fallback dataset when no
// file is given.
Dataset make_blobs(int class_count, int feature_dim, int samples_per_class, double blob_std,
                   RngStream& rng);

}  // namespace transferlab
