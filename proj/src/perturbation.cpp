#include "transferlab/perturbation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "transferlab/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace transferlab {

namespace {

constexpr double kAccumulationTolerance = 1e-9;

void write_f64_blob(const std::string& path, const std::vector<const Vec*>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  for (const Vec* row : rows) {
    for (double v : *row) detail::write_le<double>(out, v);
  }
  if (!out) throw FormatError(path + ": write failed");
}

std::vector<Vec> read_f64_blob(const std::string& path, std::size_t rows, std::size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  std::vector<Vec> out(rows, Vec(dim));
  for (auto& row : out) {
    for (double& v : row) v = detail::read_le<double>(in);
  }
  char extra;
  if (in.read(&extra, 1)) throw FormatError(path + ": trailing bytes");
  return out;
}

}  // namespace

void validate_record(const PerturbationRecord& record, std::span<const double> source_features) {
  const std::size_t n = source_features.size();
  if (record.x_prime.size() != n || record.delta.size() != n) {
    throw DimensionError("perturbation record: dimension mismatch with source");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(record.x_prime[i] - (source_features[i] + record.delta[i])) >
        kAccumulationTolerance) {
      throw InvalidArguments("perturbation record: x_prime != source + delta at component " +
                             std::to_string(i));
    }
    if (!(record.x_prime[i] >= 0.0 && record.x_prime[i] <= 1.0)) {
      throw InvalidArguments("perturbation record: x_prime outside [0,1] at component " +
                             std::to_string(i));
    }
  }
  if (std::abs(record.l2_norm - l2_norm(record.delta)) > kAccumulationTolerance) {
    throw InvalidArguments("perturbation record: stored l2_norm disagrees with delta");
  }
  if (record.surrogate_label_adv == record.surrogate_label_source) {
    throw InvalidArguments("perturbation record: surrogate label did not flip");
  }
}

void PerturbationSet::validate() const {
  for (const auto& record : records) {
    if (record.source_index < 0 || record.source_index >= static_cast<int>(sources.size())) {
      throw InvalidArguments("perturbation set: record source index out of range");
    }
    validate_record(record, sources[record.source_index].features);
  }
}

void save_perturbation_set(const PerturbationSet& set, const std::string& dir) {
  fs::create_directories(dir);

  json meta;
  meta["format_version"] = 1;
  meta["surrogate_id"] = set.surrogate_id;
  meta["feature_dim"] = set.feature_dim;
  meta["perturbations_per_source"] = set.perturbations_per_source;

  json sources = json::array();
  for (std::size_t p = 0; p < set.sources.size(); ++p) {
    json s;
    s["p"] = p;
    s["test_index"] = set.source_test_indices.at(p);
    s["label"] = set.sources[p].label;
    sources.push_back(std::move(s));
  }
  meta["sources"] = std::move(sources);

  json records = json::array();
  for (std::size_t row = 0; row < set.records.size(); ++row) {
    const auto& r = set.records[row];
    json j;
    j["p"] = r.source_index;
    j["d"] = r.perturbation_index;
    j["row"] = row;
    j["l2_norm"] = r.l2_norm;
    j["surrogate_label_source"] = r.surrogate_label_source;
    j["surrogate_label_adv"] = r.surrogate_label_adv;
    if (r.target_class) {
      j["target_class"] = *r.target_class;
    } else {
      j["target_class"] = nullptr;
    }
    j["seed"] = r.seed;
    records.push_back(std::move(j));
  }
  meta["records"] = std::move(records);

  json failures = json::array();
  for (const auto& f : set.failures) {
    failures.push_back({{"p", f.source_index}, {"d", f.perturbation_index}, {"reason", f.reason}});
  }
  meta["failures"] = std::move(failures);

  std::ofstream meta_out(fs::path(dir) / "meta.json", std::ios::binary);
  if (!meta_out) throw FormatError(dir + "/meta.json: cannot open file for writing");
  meta_out << meta.dump(2) << '\n';

  std::vector<const Vec*> x_rows;
  x_rows.reserve(set.records.size());
  for (const auto& r : set.records) x_rows.push_back(&r.x_prime);
  write_f64_blob((fs::path(dir) / "x_prime.f64").string(), x_rows);

  std::vector<const Vec*> source_rows;
  source_rows.reserve(set.sources.size());
  for (const auto& s : set.sources) source_rows.push_back(&s.features);
  write_f64_blob((fs::path(dir) / "sources.f64").string(), source_rows);
}

PerturbationSet load_perturbation_set(const std::string& dir) {
  std::ifstream meta_in(fs::path(dir) / "meta.json", std::ios::binary);
  if (!meta_in) throw FormatError(dir + "/meta.json: cannot open file");
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw FormatError(dir + "/meta.json: " + e.what());
  }

  PerturbationSet set;
  try {
    if (meta.at("format_version").get<int>() != 1) {
      throw FormatError(dir + "/meta.json: unsupported format version");
    }
    set.surrogate_id = meta.at("surrogate_id").get<std::string>();
    set.feature_dim = meta.at("feature_dim").get<int>();
    set.perturbations_per_source = meta.at("perturbations_per_source").get<int>();

    const std::size_t dim = static_cast<std::size_t>(set.feature_dim);
    const auto& sources = meta.at("sources");
    const auto source_features =
        read_f64_blob((fs::path(dir) / "sources.f64").string(), sources.size(), dim);
    set.sources.resize(sources.size());
    set.source_test_indices.resize(sources.size());
    for (std::size_t p = 0; p < sources.size(); ++p) {
      if (sources[p].at("p").get<std::size_t>() != p) {
        throw FormatError(dir + "/meta.json: sources out of order");
      }
      set.sources[p].features = source_features[p];
      set.sources[p].label = sources[p].at("label").get<int>();
      set.source_test_indices[p] = sources[p].at("test_index").get<int>();
    }

    const auto& records = meta.at("records");
    const auto x_rows = read_f64_blob((fs::path(dir) / "x_prime.f64").string(), records.size(), dim);
    set.records.resize(records.size());
    for (std::size_t row = 0; row < records.size(); ++row) {
      const auto& j = records[row];
      if (j.at("row").get<std::size_t>() != row) {
        throw FormatError(dir + "/meta.json: records out of order");
      }
      PerturbationRecord& r = set.records[row];
      r.source_index = j.at("p").get<int>();
      r.perturbation_index = j.at("d").get<int>();
      r.x_prime = x_rows[row];
      r.l2_norm = j.at("l2_norm").get<double>();
      r.surrogate_label_source = j.at("surrogate_label_source").get<int>();
      r.surrogate_label_adv = j.at("surrogate_label_adv").get<int>();
      if (!j.at("target_class").is_null()) r.target_class = j.at("target_class").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      if (r.source_index < 0 || r.source_index >= static_cast<int>(set.sources.size())) {
        throw FormatError(dir + "/meta.json: record source index out of range");
      }
      const Vec& src = set.sources[r.source_index].features;
      r.delta.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) r.delta[i] = r.x_prime[i] - src[i];
    }

    for (const auto& f : meta.at("failures")) {
      set.failures.push_back({f.at("p").get<int>(), f.at("d").get<int>(),
                              f.at("reason").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(dir + "/meta.json: " + e.what());
  }
  return set;
}

}  // namespace transferlab
