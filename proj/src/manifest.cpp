#include "transferlab/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "transferlab/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace transferlab {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::string hash_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

// Sorted relative paths of all regular files under dir, except the manifest.
std::vector<std::string> artifact_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open file for hashing");
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= kFnvPrime;
    }
    if (!in) break;
  }
  return h;
}

void write_manifest(const std::string& dir, std::uint64_t root_seed,
                    const std::map<std::string, bool>& phases, bool complete) {
  json manifest;
  manifest["format_version"] = 1;
  manifest["hash_algorithm"] = "fnv1a64";
  manifest["root_seed"] = root_seed;
  manifest["complete"] = complete;
  json phases_json = json::object();
  for (const auto& [name, done] : phases) phases_json[name] = done;
  manifest["phases"] = std::move(phases_json);

  json files = json::object();
  for (const std::string& rel : artifact_files(dir)) {
    files[rel] = hash_hex(fnv1a64_file((fs::path(dir) / rel).string()));
  }
  manifest["files"] = std::move(files);

  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw Error(dir + "/manifest.json: cannot open file for writing");
  out << manifest.dump(2) << '\n';
}

ManifestCheck verify_manifest(const std::string& dir) {
  ManifestCheck check;
  std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!in) {
    check.ok = false;
    check.problems.push_back("manifest.json missing");
    return check;
  }
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    check.ok = false;
    check.problems.push_back(std::string("manifest.json unreadable: ") + e.what());
    return check;
  }

  std::map<std::string, std::string> listed;
  for (const auto& [rel, hash] : manifest.at("files").items()) {
    listed[rel] = hash.get<std::string>();
  }
  for (const std::string& rel : artifact_files(dir)) {
    auto it = listed.find(rel);
    if (it == listed.end()) {
      check.problems.push_back("unlisted file: " + rel);
      continue;
    }
    const std::string actual = hash_hex(fnv1a64_file((fs::path(dir) / rel).string()));
    if (actual != it->second) check.problems.push_back("hash mismatch: " + rel);
    listed.erase(it);
  }
  for (const auto& kv : listed) check.problems.push_back("missing file: " + kv.first);
  check.ok = check.problems.empty();
  return check;
}

std::map<std::string, bool> read_manifest_phases(const std::string& dir) {
  std::map<std::string, bool> phases;
  std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!in) return phases;
  json manifest;
  try {
    in >> manifest;
    for (const auto& [name, done] : manifest.at("phases").items()) {
      phases[name] = done.get<bool>();
    }
  } catch (const json::exception&) {
    return {};
  }
  return phases;
}

}  // namespace transferlab
