#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "herb/common/tensor.hpp"
#include "herb/dataset/manifest.hpp"
#include "herb/nnrt/graph.hpp"
#include "herb/nnrt/weights.hpp"

namespace herb::train {

// Backbone features for a set of manifest records, row-aligned with ids/labels/splits.
struct FeatureSet {
    Tensor features;  // N x D
    std::vector<std::string> ids;
    std::vector<std::size_t> labels;
    std::vector<dataset::Split> splits;
    std::vector<std::string> classes;

    std::size_t size() const { return ids.size(); }
    std::size_t dim() const { return features.rank() == 2 ? static_cast<std::size_t>(features.dim(1)) : 0; }
    // Rows belonging to `split`, in original order.
    FeatureSet subset(dataset::Split split) const;

    bool operator==(const FeatureSet&) const = default;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Loads, standardizes, and runs each record through the backbone up to the head boundary.
FeatureSet extract_manifest_features(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights,
                                     const dataset::DatasetManifest& manifest, std::size_t batch_size = 4,
                                     const ProgressFn& progress = {});

// Binary cache: "HFTC" | u32 version | u64 N | u64 D | N*D float32, all little-endian.
// Ids, labels, splits, and class names go to the JSON sidecar `<path>.json`.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;
std::filesystem::path sidecar_path(const std::filesystem::path& cache);
void save_feature_cache(const std::filesystem::path& path, const FeatureSet& set);
// Throws std::runtime_error on a bad magic, version, size, or sidecar mismatch.
FeatureSet load_feature_cache(const std::filesystem::path& path);

struct SplitEvaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    Tensor probs;  // N x C
    std::vector<std::size_t> labels;
    std::vector<std::string> ids;
};

// Infer-mode forward over every record in `split`: no dropout, no augmentation.
// Throws std::invalid_argument if the split is empty.
SplitEvaluation evaluate_on_split(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights,
                                  const dataset::DatasetManifest& manifest, dataset::Split split,
                                  std::size_t batch_size = 4);

}  // namespace herb::train
