#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "herb/dataset/herb_info.hpp"
#include "herb/dataset/standardize.hpp"
#include "herb/modelpack/package.hpp"

namespace herb::serve {

// A client-side problem: maps to an HTTP 4xx status.
class RequestError : public std::runtime_error {
public:
    RequestError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

struct TopKEntry {
    std::size_t class_index = 0;
    std::string scientific_name;
    double confidence = 0.0;
    std::optional<dataset::HerbInfo> info;
};

struct PredictResponse {
    std::vector<TopKEntry> topk;
    std::string model_name;
    double latency_ms = 0.0;
};

// Entries without herb info carry "info_missing": true instead of "info".
nlohmann::json to_json(const PredictResponse& response);

inline constexpr std::size_t kDefaultTopK = 5;

// Shared, immutable prediction pipeline: decode -> standardize -> forward -> top-k.
class Engine {
public:
    Engine(modelpack::Package package, dataset::HerbInfoStore herbs, std::uint32_t package_crc32);

    // Reads the package and the herb-info file. An empty `herb_info` falls back to
    // the path recorded in the package (relative to the package file), if any.
    static Engine load(const std::filesystem::path& package, const std::filesystem::path& herb_info = {});

    // Throws RequestError(400) for undecodable images or k outside [1, C].
    PredictResponse predict(std::span<const std::uint8_t> image_bytes, std::size_t k) const;
    PredictResponse predict(const dataset::StandardImage& image, std::size_t k) const;

    // Confidences for every class, in double, normalized to sum to 1.
    std::vector<double> probabilities(const dataset::StandardImage& image) const;

    const dataset::HerbInfoStore& herbs() const { return herbs_; }
    const std::vector<std::string>& class_labels() const { return package_.class_labels; }
    std::size_t num_classes() const { return package_.class_labels.size(); }
    // k used when a request names none: `preferred` capped at the class count.
    std::size_t default_k(std::size_t preferred = kDefaultTopK) const { return std::min(preferred, num_classes()); }
    const std::string& model_name() const { return package_.graph.name; }
    std::uint32_t package_crc32() const { return package_crc32_; }
    // Class labels with no herb-info record.
    std::vector<std::string> missing_info() const;

private:
    modelpack::Package package_;
    dataset::HerbInfoStore herbs_;
    std::uint32_t package_crc32_;
};

// Order of confidences, highest first; ties keep the lower class index first.
std::vector<std::size_t> top_k_indices(std::span<const double> confidences, std::size_t k);

// RFC 4648 base64 (standard alphabet, padding optional, whitespace ignored).
// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);
std::string base64_encode(std::span<const std::uint8_t> bytes);

std::string crc_hex(std::uint32_t crc);

}  // namespace herb::serve
