#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace transferlab {

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64_file(const std::string& path);

// Writes manifest.json at the root of `dir`, listing every regular file under
// it (except the manifest itself) with an FNV-1a content hash, plus which
// pipeline phases have completed. `complete` marks whether the run finished
// all phases; partial runs keep complete=false.
void write_manifest(const std::string& dir, std::uint64_t root_seed,
                    const std::map<std::string, bool>& phases, bool complete);

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> problems;
};

// Recomputes every listed hash and reports missing, extra, or altered files.
ManifestCheck verify_manifest(const std::string& dir);

// Phase flags recorded in an existing manifest; empty if none exists yet.
std::map<std::string, bool> read_manifest_phases(const std::string& dir);

}  // namespace transferlab
