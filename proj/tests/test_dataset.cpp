#include <doctest.h>

#include <cstdint>
#include <fstream>
#include <set>

#include "test_helpers.hpp"
#include "transferlab/dataset.hpp"
#include "transferlab/errors.hpp"

using namespace transferlab;
using transferlab::testing::ScratchDir;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

void write_be_u32(std::ofstream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

// Tiny IDX pair: `count` images of rows x cols incrementing pixels.
void write_idx_pair(const std::string& image_path, const std::string& label_path, int count,
                    int rows, int cols, bool corrupt_magic = false, bool truncate = false) {
  std::ofstream images(image_path, std::ios::binary);
  write_be_u32(images, corrupt_magic ? 0xDEADBEEF : 0x00000803);
  write_be_u32(images, count);
  write_be_u32(images, rows);
  write_be_u32(images, cols);
  const int pixels = truncate ? count * rows * cols - 3 : count * rows * cols;
  for (int i = 0; i < pixels; ++i) images.put(static_cast<char>(i % 256));
  images.close();

  std::ofstream labels(label_path, std::ios::binary);
  write_be_u32(labels, 0x00000801);
  write_be_u32(labels, count);
  for (int i = 0; i < count; ++i) labels.put(static_cast<char>(i % 3));
}

}  // namespace

TEST_CASE("csv: integer rows scale by 255") {
  ScratchDir dir("csv");
  write_file(dir.file("d.csv"), "7,0,128,255\n1,10,20,30\n");
  const Dataset ds = load_dataset(dir.file("d.csv"), DatasetFormat::csv);
  CHECK(ds.feature_dim == 3);
  CHECK(ds.class_count == 8);
  CHECK(ds.samples[0].label == 7);
  CHECK(ds.samples[0].features[0] == 0.0);
  CHECK(ds.samples[0].features[1] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  CHECK(ds.samples[0].features[2] == 1.0);
}

TEST_CASE("csv: real-valued rows pass through unscaled") {
  ScratchDir dir("csvr");
  write_file(dir.file("d.csv"), "0,0.25,1.0\n1,0.5,0\n");
  const Dataset ds = load_dataset(dir.file("d.csv"), DatasetFormat::csv);
  CHECK(ds.samples[0].features[0] == 0.25);
  CHECK(ds.samples[0].features[1] == 1.0);
  CHECK(ds.samples[1].features[0] == 0.5);
  // A single real token makes the whole file real-valued, so the bare "0"
  // and "1.0" stay as-is.
  CHECK(ds.samples[1].features[1] == 0.0);
}

TEST_CASE("csv: header skipped on request, order preserved") {
  ScratchDir dir("csvh");
  write_file(dir.file("d.csv"), "label,f1\n2,3\n0,255\n");
  CHECK_THROWS_AS(load_dataset(dir.file("d.csv"), DatasetFormat::csv), ParseError);
  const Dataset ds = load_dataset(dir.file("d.csv"), DatasetFormat::csv, true);
  CHECK(ds.size() == 2);
  CHECK(ds.samples[0].label == 2);
  CHECK(ds.samples[1].label == 0);
}

TEST_CASE("csv: ragged rows raise DimensionError with the line") {
  ScratchDir dir("csvrag");
  write_file(dir.file("d.csv"), "0,1,2\n1,3\n");
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("d.csv"), DatasetFormat::csv),
                       doctest::Contains(":2:"), DimensionError);
}

TEST_CASE("csv: malformed and out-of-range values raise ParseError") {
  ScratchDir dir("csvbad");
  write_file(dir.file("a.csv"), "0,1,abc\n");
  CHECK_THROWS_AS(load_dataset(dir.file("a.csv"), DatasetFormat::csv), ParseError);
  write_file(dir.file("b.csv"), "0,1,300\n");
  CHECK_THROWS_AS(load_dataset(dir.file("b.csv"), DatasetFormat::csv), ParseError);
  write_file(dir.file("c.csv"), "0,0.5,1.5\n");
  CHECK_THROWS_AS(load_dataset(dir.file("c.csv"), DatasetFormat::csv), ParseError);
  CHECK_THROWS_AS(load_dataset(dir.file("missing.csv"), DatasetFormat::csv), ParseError);
}

TEST_CASE("csv: save/load round trip is bit-exact") {
  ScratchDir dir("csvrt");
  RngStream rng(11, {});
  Dataset ds = make_blobs(3, 7, 20, 0.2, rng);
  save_dataset_csv(ds, dir.file("rt.csv"));
  const Dataset back = load_dataset(dir.file("rt.csv"), DatasetFormat::csv);
  REQUIRE(back.size() == ds.size());
  CHECK(back.class_count == ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].label == ds.samples[i].label);
    for (int k = 0; k < ds.feature_dim; ++k) {
      CHECK(back.samples[i].features[k] == ds.samples[i].features[k]);
    }
  }
}

TEST_CASE("idx: loads an image/label pair") {
  ScratchDir dir("idx");
  write_idx_pair(dir.file("train-images-idx3-ubyte"), dir.file("train-labels-idx1-ubyte"), 5, 4, 4);
  const Dataset ds = load_dataset(dir.file("train-images-idx3-ubyte"), DatasetFormat::idx);
  CHECK(ds.size() == 5);
  CHECK(ds.feature_dim == 16);
  CHECK(ds.samples[0].features[1] == doctest::Approx(1.0 / 255.0));
  CHECK(ds.samples[1].label == 1);
}

TEST_CASE("idx: bad magic, truncation, count mismatch") {
  ScratchDir dir("idxbad");
  write_idx_pair(dir.file("a-images-idx3-ubyte"), dir.file("a-labels-idx1-ubyte"), 3, 2, 2, true);
  CHECK_THROWS_AS(load_dataset(dir.file("a-images-idx3-ubyte"), DatasetFormat::idx), ParseError);

  write_idx_pair(dir.file("b-images-idx3-ubyte"), dir.file("b-labels-idx1-ubyte"), 3, 2, 2, false,
                 true);
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("b-images-idx3-ubyte"), DatasetFormat::idx),
                       doctest::Contains("offset"), ParseError);

  write_idx_pair(dir.file("c-images-idx3-ubyte"), dir.file("ignored"), 3, 2, 2);
  {
    std::ofstream labels(dir.file("c-labels-idx1-ubyte"), std::ios::binary);
    write_be_u32(labels, 0x00000801);
    write_be_u32(labels, 2);  // fewer labels than images
    labels.put(0);
    labels.put(1);
  }
  CHECK_THROWS_AS(load_dataset(dir.file("c-images-idx3-ubyte"), DatasetFormat::idx),
                  DimensionError);
}

TEST_CASE("split: 10 samples at 0.8 give disjoint exhaustive 8/2") {
  RngStream gen(1, {});
  Dataset ds = make_blobs(2, 3, 5, 0.1, gen);
  REQUIRE(ds.size() == 10);
  RngStream rng(1, {2});
  const auto [train, test] = split_dataset(ds, 0.8, rng);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);

  // Disjoint and exhaustive as multisets of feature vectors.
  std::multiset<std::string> all, parts;
  auto key = [](const LabeledSample& s) {
    std::string k;
    for (double v : s.features) k += format_double(v) + ",";
    return k;
  };
  for (const auto& s : ds.samples) all.insert(key(s));
  for (const auto& s : train.samples) parts.insert(key(s));
  for (const auto& s : test.samples) parts.insert(key(s));
  CHECK(all == parts);
}

TEST_CASE("split: identical seeds give identical splits") {
  RngStream gen(2, {});
  Dataset ds = make_blobs(3, 4, 10, 0.1, gen);
  RngStream r1(9, {1}), r2(9, {1});
  const auto [tr1, te1] = split_dataset(ds, 0.7, r1);
  const auto [tr2, te2] = split_dataset(ds, 0.7, r2);
  REQUIRE(tr1.size() == tr2.size());
  for (std::size_t i = 0; i < tr1.size(); ++i) {
    CHECK(tr1.samples[i].features == tr2.samples[i].features);
  }
}

TEST_CASE("split: dropping a class from train raises StratificationError") {
  // One singleton class; a 0.5 split must sometimes push it into test. With
  // a fixed stream this is deterministic, so find a seed that drops it.
  Dataset ds;
  ds.class_count = 2;
  ds.feature_dim = 1;
  for (int i = 0; i < 9; ++i) ds.samples.push_back({{0.1}, 0});
  ds.samples.push_back({{0.9}, 1});
  bool threw = false;
  for (std::uint64_t seed = 0; seed < 20 && !threw; ++seed) {
    RngStream rng(seed, {});
    try {
      (void)split_dataset(ds, 0.5, rng);
    } catch (const StratificationError&) {
      threw = true;
    }
  }
  CHECK(threw);
  RngStream rng(0, {});
  CHECK_THROWS_AS(split_dataset(ds, 1.5, rng), InvalidArguments);
}

TEST_CASE("blobs: shape, range, determinism") {
  RngStream r1(33, {}), r2(33, {});
  const Dataset a = make_blobs(4, 6, 25, 0.3, r1);
  const Dataset b = make_blobs(4, 6, 25, 0.3, r2);
  CHECK(a.size() == 100);
  CHECK(a.class_count == 4);
  a.validate();  // features clipped into [0,1], labels in range
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].features == b.samples[i].features);
  }
}

TEST_CASE("dataset validate catches violations") {
  Dataset ds;
  ds.class_count = 2;
  ds.feature_dim = 2;
  ds.samples.push_back({{0.5, 0.5}, 0});
  CHECK_NOTHROW(ds.validate());
  ds.samples.push_back({{0.5}, 0});
  CHECK_THROWS_AS(ds.validate(), DimensionError);
  ds.samples[1] = {{0.5, 2.0}, 0};
  CHECK_THROWS_AS(ds.validate(), InvalidArguments);
  ds.samples[1] = {{0.5, 0.5}, 7};
  CHECK_THROWS_AS(ds.validate(), InvalidArguments);
}
