#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "herb/dataset/manifest.hpp"

namespace herb::dataset {

// Images whose longer side exceeds this multiple of the shorter side are rejected.
inline constexpr double kMaxAspectRatio = 4.0;

struct Reject {
    std::filesystem::path path;
    std::string reason;
};

struct IngestResult {
    DatasetManifest manifest;
    std::vector<Reject> rejects;
    std::vector<std::string> warnings;
};

// Scans `root` where each immediate subdirectory is one class (its name is the
// label). Classes and files are visited in lexicographic order. Record ids are
// "<label>/<file name>". Throws std::runtime_error if `root` is missing or has
// no class subdirectories.
IngestResult ingest_directory(const std::filesystem::path& root);

// JSON-lines {"path","reason"}.
void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

}  // namespace herb::dataset
