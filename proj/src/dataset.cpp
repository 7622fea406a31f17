#include "transferlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "transferlab/errors.hpp"

namespace transferlab {

namespace {

bool is_integer_token(std::string_view tok) {
  std::size_t i = 0;
  while (i < tok.size() && (tok[i] == ' ' || tok[i] == '\t')) ++i;
  std::size_t end = tok.size();
  while (end > i && (tok[end - 1] == ' ' || tok[end - 1] == '\t' || tok[end - 1] == '\r')) --end;
  if (i >= end) return false;
  if (tok[i] == '+' || tok[i] == '-') ++i;
  if (i >= end) return false;
  for (; i < end; ++i) {
    if (tok[i] < '0' || tok[i] > '9') return false;
  }
  return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

std::uint32_t read_be_u32(std::istream& in, const std::string& path, std::size_t offset) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) {
    throw ParseError(path + ": truncated at offset " + std::to_string(offset));
  }
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

Dataset load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  struct Row {
    int label;
    std::vector<double> values;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  bool all_integer = true;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 2) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected label plus features");
    }
    if (!is_integer_token(cells[0])) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": label must be an integer");
    }
    Row row;
    row.line_no = line_no;
    const double label_value = parse_double(cells[0]);
    if (label_value < 0) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": label must be non-negative");
    }
    row.label = static_cast<int>(label_value);
    row.values.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      double v;
      try {
        v = parse_double(cells[i]);
      } catch (const ParseError&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad feature value '" +
                         cells[i] + "'");
      }
      if (!is_integer_token(cells[i])) all_integer = false;
      row.values.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  const std::size_t dim = rows.front().values.size();
  Dataset ds;
  ds.feature_dim = static_cast<int>(dim);
  ds.samples.reserve(rows.size());
  int max_label = 0;
  for (const auto& row : rows) {
    if (row.values.size() != dim) {
      throw DimensionError(path + ":" + std::to_string(row.line_no) + ": row has " +
                           std::to_string(row.values.size()) + " features, expected " +
                           std::to_string(dim));
    }
    LabeledSample sample;
    sample.label = row.label;
    max_label = std::max(max_label, row.label);
    sample.features.reserve(dim);
    for (double v : row.values) {
      double scaled = all_integer ? v / 255.0 : v;
      if (!(scaled >= 0.0 && scaled <= 1.0) || !std::isfinite(scaled)) {
        throw ParseError(path + ":" + std::to_string(row.line_no) +
                         ": feature value out of range: " + format_double(v));
      }
      sample.features.push_back(scaled);
    }
    ds.samples.push_back(std::move(sample));
  }
  ds.class_count = max_label + 1;
  return ds;
}

std::string derive_idx_label_path(const std::string& image_path) {
  std::string p = image_path;
  auto replace_all = [&p](const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    bool hit = false;
    while ((pos = p.find(from, pos)) != std::string::npos) {
      p.replace(pos, from.size(), to);
      pos += to.size();
      hit = true;
    }
    return hit;
  };
  const bool a = replace_all("images", "labels");
  const bool b = replace_all("idx3", "idx1");
  if (!a && !b) {
    throw ParseError(image_path + ": cannot derive label file name (expected 'images'/'idx3' in it)");
  }
  return p;
}

Dataset load_idx(const std::string& image_path) {
  constexpr std::uint32_t kImageMagic = 0x00000803;
  constexpr std::uint32_t kLabelMagic = 0x00000801;

  std::ifstream images(image_path, std::ios::binary);
  if (!images) throw ParseError(image_path + ": cannot open file");
  const std::uint32_t magic = read_be_u32(images, image_path, 0);
  if (magic != kImageMagic) {
    throw ParseError(image_path + ": bad magic number at offset 0");
  }
  const std::uint32_t count = read_be_u32(images, image_path, 4);
  const std::uint32_t rows = read_be_u32(images, image_path, 8);
  const std::uint32_t cols = read_be_u32(images, image_path, 12);
  const std::size_t dim = std::size_t(rows) * cols;
  if (dim == 0) throw ParseError(image_path + ": zero image dimensions");

  const std::string label_path = derive_idx_label_path(image_path);
  std::ifstream labels(label_path, std::ios::binary);
  if (!labels) throw ParseError(label_path + ": cannot open label file");
  const std::uint32_t lmagic = read_be_u32(labels, label_path, 0);
  if (lmagic != kLabelMagic) {
    throw ParseError(label_path + ": bad magic number at offset 0");
  }
  const std::uint32_t lcount = read_be_u32(labels, label_path, 4);
  if (lcount != count) {
    throw DimensionError(image_path + ": " + std::to_string(count) + " images but " +
                         std::to_string(lcount) + " labels");
  }

  Dataset ds;
  ds.feature_dim = static_cast<int>(dim);
  ds.samples.reserve(count);
  std::vector<unsigned char> pixel_buf(dim);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    images.read(reinterpret_cast<char*>(pixel_buf.data()), static_cast<std::streamsize>(dim));
    if (!images) {
      throw ParseError(image_path + ": truncated at offset " + std::to_string(16 + std::size_t(i) * dim));
    }
    char label_byte;
    labels.read(&label_byte, 1);
    if (!labels) {
      throw ParseError(label_path + ": truncated at offset " + std::to_string(8 + i));
    }
    LabeledSample sample;
    sample.label = static_cast<unsigned char>(label_byte);
    max_label = std::max(max_label, sample.label);
    sample.features.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) sample.features[k] = pixel_buf[k] / 255.0;
    ds.samples.push_back(std::move(sample));
  }
  ds.class_count = max_label + 1;
  return ds;
}

}  // namespace

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "csv") return DatasetFormat::csv;
  if (name == "idx") return DatasetFormat::idx;
  throw InvalidArguments("unknown dataset format: '" + name + "'");
}

std::string to_string(DatasetFormat format) {
  return format == DatasetFormat::csv ? "csv" : "idx";
}

void Dataset::validate() const {
  if (feature_dim <= 0) throw InvalidArguments("dataset: feature_dim must be positive");
  if (class_count <= 0) throw InvalidArguments("dataset: class_count must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (static_cast<int>(s.features.size()) != feature_dim) {
      throw DimensionError("dataset: sample " + std::to_string(i) + " has " +
                           std::to_string(s.features.size()) + " features, expected " +
                           std::to_string(feature_dim));
    }
    if (s.label < 0 || s.label >= class_count) {
      throw InvalidArguments("dataset: sample " + std::to_string(i) + " label " +
                             std::to_string(s.label) + " outside [0, " +
                             std::to_string(class_count) + ")");
    }
    for (double v : s.features) {
      if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v)) {
        throw InvalidArguments("dataset: sample " + std::to_string(i) +
                               " has feature outside [0,1]");
      }
    }
  }
}

Dataset load_dataset(const std::string& path, DatasetFormat format, bool has_header) {
  Dataset ds = (format == DatasetFormat::csv) ? load_csv(path, has_header) : load_idx(path);
  ds.validate();
  return ds;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open file for writing");
  for (const auto& s : ds.samples) {
    out << s.label;
    for (double v : s.features) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error(path + ": write failed");
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, RngStream& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArguments("split_dataset: train_fraction must be in (0,1)");
  }
  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  auto k64 = std::llround(train_fraction * static_cast<double>(n));
  const std::size_t k = static_cast<std::size_t>(std::clamp<long long>(k64, 0, static_cast<long long>(n)));

  Dataset train{{}, ds.class_count, ds.feature_dim};
  Dataset test{{}, ds.class_count, ds.feature_dim};
  train.samples.reserve(k);
  test.samples.reserve(n - k);
  for (std::size_t i = 0; i < n; ++i) {
    (i < k ? train : test).samples.push_back(ds.samples[order[i]]);
  }

  std::set<int> classes_in_ds;
  for (const auto& s : ds.samples) classes_in_ds.insert(s.label);
  std::set<int> classes_in_train;
  for (const auto& s : train.samples) classes_in_train.insert(s.label);
  for (int c : classes_in_ds) {
    if (!classes_in_train.count(c)) {
      throw StratificationError("split_dataset: class " + std::to_string(c) +
                                " has no samples in the train split");
    }
  }
  return {std::move(train), std::move(test)};
}

Dataset make_blobs(int class_count, int feature_dim, int samples_per_class, double blob_std,
                   RngStream& rng) {
  if (class_count < 2) throw InvalidArguments("make_blobs: need at least two classes");
  if (feature_dim < 1) throw InvalidArguments("make_blobs: feature_dim must be positive");
  if (samples_per_class < 1) throw InvalidArguments("make_blobs: samples_per_class must be positive");
  if (!(blob_std > 0.0)) throw InvalidArguments("make_blobs: blob_std must be positive");

  std::vector<Vec> means(class_count, Vec(feature_dim));
  for (auto& mean : means) {
    for (double& m : mean) m = 0.2 + 0.6 * rng.next_double();
  }

  Dataset ds;
  ds.class_count = class_count;
  ds.feature_dim = feature_dim;
  ds.samples.reserve(static_cast<std::size_t>(class_count) * samples_per_class);
  for (int c = 0; c < class_count; ++c) {
    for (int s = 0; s < samples_per_class; ++s) {
      LabeledSample sample;
      sample.label = c;
      sample.features.resize(feature_dim);
      for (int k = 0; k < feature_dim; ++k) {
        sample.features[k] = means[c][k] + blob_std * rng.next_normal();
      }
      clip01(sample.features);
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

}  // namespace transferlab
