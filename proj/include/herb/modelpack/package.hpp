#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "herb/modelpack/quantize.hpp"
#include "herb/nnrt/graph.hpp"
#include "herb/nnrt/weights.hpp"

namespace herb::modelpack {

// Layout: "HMP1" | u32 version | u64 header length | UTF-8 JSON header |
// zero padding to 64 | blobs, each starting on a 64-byte boundary.
inline constexpr char kMagic[4] = {'H', 'M', 'P', '1'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kAlignment = 64;
// Batchnorm layers are stored as one 4 x C tensor "<layer>/stats" with rows
// gamma, beta, mean, variance; every other parameter is its own tensor.
inline constexpr const char* kStatsParam = "stats";

enum class PackageErrorKind { bad_magic, bad_version, truncated, bad_header, bad_offset, shape_mismatch, bad_tensor };

std::string_view to_string(PackageErrorKind kind);

class PackageError : public std::runtime_error {
public:
    PackageError(PackageErrorKind kind, const std::string& message);
    PackageErrorKind kind() const { return kind_; }

private:
    PackageErrorKind kind_;
};

struct TensorEntry {
    std::string layer;
    std::string param;
    DType dtype = DType::f32;
    Tensor::Shape shape;
    std::uint64_t byte_offset = 0;  // from start of file
    std::uint64_t byte_length = 0;
    std::uint32_t crc32 = 0;
    AffineParams affine;  // i8 only

    std::string name() const { return layer + "/" + param; }
};

struct Package {
    nnrt::ModelGraph graph;
    nnrt::WeightStore weights;  // dequantized to f32
    std::vector<std::string> class_labels;
    QuantMode quantization = QuantMode::none;
    std::string herb_info;  // optional reference to a herb-info file
    std::vector<TensorEntry> tensors;
    // Tensors whose stored CRC-32 does not match their blob.
    std::vector<std::string> checksum_failures;
};

// `weights` must be complete for `graph`; labels must match the softmax width.
std::vector<std::uint8_t> serialize(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights,
                                    const std::vector<std::string>& class_labels, QuantMode mode,
                                    const std::string& herb_info = {});

// Validates magic, version, header, offsets, and shapes before returning.
// Every failure is a PackageError.
Package deserialize(std::span<const std::uint8_t> bytes);

void write_package(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
Package read_package(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

struct VerificationReport {
    std::size_t probes = 0;
    double max_abs_deviation = 0.0;
    double top1_agreement = 0.0;
    std::vector<std::string> checksum_failures;
    std::optional<std::string> error;  // set when the package could not be loaded

    bool ok() const { return !error && checksum_failures.empty(); }
};

// Runs the probes through the reference model and the packaged one.
VerificationReport verify_package(std::span<const std::uint8_t> bytes, const nnrt::ModelGraph& graph,
                                  const nnrt::WeightStore& weights, const std::vector<Tensor>& probes);

// Seeded uniform [0, 1) probe images shaped like the graph input (1 x C x H x W each).
std::vector<Tensor> random_probes(const nnrt::ModelGraph& graph, std::size_t count, std::uint64_t seed);

}  // namespace herb::modelpack
