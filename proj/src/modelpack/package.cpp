#include "herb/modelpack/package.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>
#include <zlib.h>

#include "herb/common/image.hpp"
#include "herb/common/le_bytes.hpp"
#include "herb/common/rng.hpp"
#include "herb/nnrt/forward.hpp"

namespace herb::modelpack {

using nlohmann::json;

namespace {

constexpr std::size_t kPreamble = 4 + 4 + 8;

std::uint64_t align_up(std::uint64_t n) { return (n + kAlignment - 1) / kAlignment * kAlignment; }

[[noreturn]] void fail(PackageErrorKind kind, const std::string& message) { throw PackageError(kind, message); }

constexpr const char* kBatchnormRows[4] = {"gamma", "beta", "mean", "variance"};

struct StoredTensor {
    std::string layer;
    std::string param;
    Tensor::Shape shape;
};

bool is_batchnorm(const nnrt::ModelGraph& graph, const std::string& layer) {
    const auto* spec = graph.find(layer);
    return spec != nullptr && spec->kind == nnrt::LayerKind::batchnorm;
}

// Tensors as laid out in the file: batchnorm parameters share one blob per layer.
std::vector<StoredTensor> stored_layout(const nnrt::ModelGraph& graph) {
    std::vector<StoredTensor> out;
    for (const auto& [layer, params] : nnrt::expected_parameters(graph)) {
        if (is_batchnorm(graph, layer)) {
            out.push_back({layer, kStatsParam, {4, params.at("gamma").at(0)}});
            continue;
        }
        for (const auto& [param, shape] : params) out.push_back({layer, param, shape});
    }
    return out;
}

Tensor pack_batchnorm(const nnrt::WeightStore& weights, const std::string& layer) {
    const auto channels = static_cast<std::int64_t>(weights.get(layer, "gamma").size());
    Tensor stats({4, channels});
    for (int row = 0; row < 4; ++row) {
        const Tensor& t = weights.get(layer, kBatchnormRows[row]);
        std::copy(t.data(), t.data() + t.size(), stats.data() + row * channels);
    }
    return stats;
}

void unpack_batchnorm(nnrt::WeightStore& weights, const std::string& layer, const Tensor& stats) {
    const std::int64_t channels = stats.dim(1);
    for (int row = 0; row < 4; ++row) {
        Tensor t({channels});
        std::copy_n(stats.data() + row * channels, channels, t.data());
        weights.set(layer, kBatchnormRows[row], std::move(t));
    }
}

json entry_to_json(const TensorEntry& e) {
    json j{{"name", e.name()},
           {"dtype", to_string(e.dtype)},
           {"shape", e.shape},
           {"byte_offset", e.byte_offset},
           {"byte_length", e.byte_length},
           {"crc32", e.crc32}};
    if (e.dtype == DType::i8) {
        j["scale"] = e.affine.scale;
        j["zero_point"] = e.affine.zero_point;
        if (e.affine.constant) j["constant"] = true;
    }
    return j;
}

TensorEntry entry_from_json(const json& j) {
    TensorEntry e;
    const auto name = j.at("name").get<std::string>();
    const auto slash = name.rfind('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == name.size()) {
        fail(PackageErrorKind::bad_tensor, "tensor name '" + name + "' is not layer/param");
    }
    e.layer = name.substr(0, slash);
    e.param = name.substr(slash + 1);
    try {
        e.dtype = parse_dtype(j.at("dtype").get<std::string>());
    } catch (const std::invalid_argument& err) {
        fail(PackageErrorKind::bad_tensor, name + ": " + err.what());
    }
    e.shape = j.at("shape").get<Tensor::Shape>();
    e.byte_offset = j.at("byte_offset").get<std::uint64_t>();
    e.byte_length = j.at("byte_length").get<std::uint64_t>();
    e.crc32 = j.at("crc32").get<std::uint32_t>();
    if (e.dtype == DType::i8) {
        e.affine.scale = j.at("scale").get<double>();
        e.affine.zero_point = j.at("zero_point").get<std::int64_t>();
        e.affine.constant = j.value("constant", false);
        if (!std::isfinite(e.affine.scale) || e.affine.scale <= 0.0) {
            fail(PackageErrorKind::bad_tensor, name + ": i8 scale must be positive");
        }
    }
    return e;
}

Package parse(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kPreamble) fail(PackageErrorKind::truncated, "file shorter than the fixed preamble");
    if (!std::equal(kMagic, kMagic + 4, bytes.begin())) fail(PackageErrorKind::bad_magic, "not an HMP1 package");
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != kVersion) fail(PackageErrorKind::bad_version, "unsupported version " + std::to_string(version));
    const std::uint64_t header_length = get_u64(bytes.data() + 8);
    if (header_length > bytes.size() - kPreamble) {
        fail(PackageErrorKind::truncated, "header length " + std::to_string(header_length) + " exceeds file");
    }
    const std::uint64_t data_start = align_up(kPreamble + header_length);

    json header;
    try {
        const char* text = reinterpret_cast<const char*>(bytes.data() + kPreamble);
        header = json::parse(text, text + header_length);
    } catch (const json::exception& e) {
        fail(PackageErrorKind::bad_header, std::string("header is not valid JSON: ") + e.what());
    }
    if (!header.is_object()) fail(PackageErrorKind::bad_header, "header is not a JSON object");

    Package pkg;
    try {
        pkg.graph = nnrt::graph_from_json(header.at("graph"));
        pkg.class_labels = header.at("class_labels").get<std::vector<std::string>>();
        pkg.quantization = parse_quant_mode(header.at("quantization").at("mode").get<std::string>());
        pkg.graph.batchnorm_epsilon = header.at("batchnorm_epsilon").get<double>();
        pkg.herb_info = header.value("herb_info", std::string{});
    } catch (const PackageError&) {
        throw;
    } catch (const std::exception& e) {
        fail(PackageErrorKind::bad_header, e.what());
    }
    if (!(pkg.graph.batchnorm_epsilon > 0.0) || !std::isfinite(pkg.graph.batchnorm_epsilon)) {
        fail(PackageErrorKind::bad_header, "batchnorm_epsilon must be positive");
    }
    if (pkg.class_labels.size() != static_cast<std::size_t>(pkg.graph.num_classes())) {
        fail(PackageErrorKind::bad_header, std::to_string(pkg.class_labels.size()) + " class labels for a " +
                                               std::to_string(pkg.graph.num_classes()) + "-way softmax");
    }

    std::map<std::string, Tensor::Shape> expected;
    for (auto& t : stored_layout(pkg.graph)) expected.emplace(t.layer + "/" + t.param, std::move(t.shape));
    const json& table = header.at("tensor_table");
    if (!table.is_array()) fail(PackageErrorKind::bad_header, "tensor_table is not an array");
    std::set<std::string> seen;
    std::uint64_t padded_end = data_start;
    for (const auto& item : table) {
        TensorEntry e;
        try {
            e = entry_from_json(item);
        } catch (const PackageError&) {
            throw;
        } catch (const std::exception& err) {
            fail(PackageErrorKind::bad_tensor, std::string("malformed tensor entry: ") + err.what());
        }
        const std::string name = e.name();
        if (!seen.insert(name).second) fail(PackageErrorKind::bad_tensor, "duplicate tensor " + name);

        const auto want = expected.find(name);
        if (want == expected.end()) fail(PackageErrorKind::bad_tensor, "unexpected tensor " + name);
        if (e.shape != want->second) {
            fail(PackageErrorKind::shape_mismatch, "tensor " + name + " has shape " + shape_to_string(e.shape) +
                                                       ", graph expects " + shape_to_string(want->second));
        }
        const std::uint64_t count = element_count(e.shape);
        if (e.byte_length != count * dtype_size(e.dtype)) {
            fail(PackageErrorKind::bad_tensor, "tensor " + name + " byte_length " + std::to_string(e.byte_length) +
                                                   " does not match its shape");
        }
        if (e.byte_offset % kAlignment != 0 || e.byte_offset < data_start) {
            fail(PackageErrorKind::bad_offset, "tensor " + name + " offset " + std::to_string(e.byte_offset) +
                                                   " is misaligned or inside the header");
        }
        if (e.byte_offset > bytes.size() || e.byte_length > bytes.size() - e.byte_offset) {
            fail(PackageErrorKind::truncated, "tensor " + name + " extends past end of file");
        }

        padded_end = std::max(padded_end, align_up(e.byte_offset + e.byte_length));

        const auto blob_bytes = bytes.subspan(e.byte_offset, e.byte_length);
        if (crc32_of(blob_bytes) != e.crc32) pkg.checksum_failures.push_back(name);
        QuantizedBlob blob{e.dtype, {blob_bytes.begin(), blob_bytes.end()}, e.affine};
        Tensor value = dequantize(blob, e.shape);
        if (e.param == kStatsParam && is_batchnorm(pkg.graph, e.layer)) {
            unpack_batchnorm(pkg.weights, e.layer, value);
        } else {
            pkg.weights.set(e.layer, e.param, std::move(value));
        }
        pkg.tensors.push_back(std::move(e));
    }
    for (const auto& [name, shape] : expected) {
        if (!seen.contains(name)) fail(PackageErrorKind::bad_tensor, "missing tensor " + name);
    }
    if (bytes.size() < padded_end) fail(PackageErrorKind::truncated, "final blob padding is cut short");
    return pkg;
}

}  // namespace

std::string_view to_string(PackageErrorKind kind) {
    switch (kind) {
        case PackageErrorKind::bad_magic: return "bad_magic";
        case PackageErrorKind::bad_version: return "bad_version";
        case PackageErrorKind::truncated: return "truncated";
        case PackageErrorKind::bad_header: return "bad_header";
        case PackageErrorKind::bad_offset: return "bad_offset";
        case PackageErrorKind::shape_mismatch: return "shape_mismatch";
        case PackageErrorKind::bad_tensor: return "bad_tensor";
    }
    return "?";
}

PackageError::PackageError(PackageErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights,
                                    const std::vector<std::string>& class_labels, QuantMode mode,
                                    const std::string& herb_info) {
    nnrt::check_weights(graph, weights);
    if (class_labels.size() != static_cast<std::size_t>(graph.num_classes())) {
        throw std::invalid_argument(std::to_string(class_labels.size()) + " class labels for a " +
                                    std::to_string(graph.num_classes()) + "-way softmax");
    }

    std::vector<TensorEntry> entries;
    std::vector<QuantizedBlob> blobs;
    for (const auto& stored : stored_layout(graph)) {
        const std::string name = stored.layer + "/" + stored.param;
        const Tensor t = stored.param == kStatsParam && is_batchnorm(graph, stored.layer)
                             ? pack_batchnorm(weights, stored.layer)
                             : weights.get(stored.layer, stored.param);
        QuantizedBlob blob;
        try {
            blob = quantize_tensor(t, mode);
        } catch (const std::domain_error& e) {
            throw std::invalid_argument(name + ": " + e.what());
        }
        TensorEntry e;
        e.layer = stored.layer;
        e.param = stored.param;
        e.dtype = blob.dtype;
        e.shape = stored.shape;
        e.byte_length = blob.bytes.size();
        e.crc32 = crc32_of(blob.bytes);
        e.affine = blob.affine;
        entries.push_back(std::move(e));
        blobs.push_back(std::move(blob));
    }

    // Offsets depend on the header length, which depends on the offsets; iterate to a fixed point.
    std::string header_text;
    std::uint64_t data_start = align_up(kPreamble);
    for (;;) {
        std::uint64_t offset = data_start;
        json table = json::array();
        for (auto& e : entries) {
            e.byte_offset = offset;
            offset = align_up(offset + e.byte_length);
            table.push_back(entry_to_json(e));
        }
        json header{{"graph", nnrt::graph_to_json(graph)},
                    {"class_labels", class_labels},
                    {"tensor_table", std::move(table)},
                    {"quantization", {{"mode", to_string(mode)}}},
                    {"batchnorm_epsilon", graph.batchnorm_epsilon}};
        if (!herb_info.empty()) header["herb_info"] = herb_info;
        header_text = header.dump();
        const std::uint64_t needed = align_up(kPreamble + header_text.size());
        if (needed == data_start) break;
        data_start = needed;
    }

    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u64(out, header_text.size());
    out.insert(out.end(), header_text.begin(), header_text.end());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out.resize(entries[i].byte_offset, 0);
        out.insert(out.end(), blobs[i].bytes.begin(), blobs[i].bytes.end());
    }
    out.resize(align_up(out.size()), 0);
    return out;
}

Package deserialize(std::span<const std::uint8_t> bytes) {
    try {
        return parse(bytes);
    } catch (const PackageError&) {
        throw;
    } catch (const std::exception& e) {
        throw PackageError(PackageErrorKind::bad_header, e.what());
    }
}

void write_package(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    write_file_bytes(path, bytes);
}

Package read_package(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

VerificationReport verify_package(std::span<const std::uint8_t> bytes, const nnrt::ModelGraph& graph,
                                  const nnrt::WeightStore& weights, const std::vector<Tensor>& probes) {
    VerificationReport report;
    Package pkg;
    try {
        pkg = deserialize(bytes);
    } catch (const PackageError& e) {
        report.error = e.what();
        return report;
    }
    report.checksum_failures = pkg.checksum_failures;
    std::size_t agree = 0;
    std::size_t rows = 0;
    for (const Tensor& probe : probes) {
        const Tensor a = nnrt::predict_proba(graph, weights, probe);
        const Tensor b = nnrt::predict_proba(pkg.graph, pkg.weights, probe);
        for (std::size_t i = 0; i < a.size(); ++i) {
            report.max_abs_deviation = std::max(report.max_abs_deviation, static_cast<double>(std::abs(a[i] - b[i])));
        }
        const auto ta = nnrt::argmax_rows(a);
        const auto tb = nnrt::argmax_rows(b);
        for (std::size_t i = 0; i < ta.size(); ++i) agree += ta[i] == tb[i] ? 1 : 0;
        rows += ta.size();
    }
    report.probes = rows;
    report.top1_agreement = rows == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(rows);
    return report;
}

std::vector<Tensor> random_probes(const nnrt::ModelGraph& graph, std::size_t count, std::uint64_t seed) {
    std::vector<Tensor> probes;
    const auto& s = graph.input_shape;
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(seed, i);
        Tensor t({1, s[0], s[1], s[2]});
        for (float& v : t.values()) v = static_cast<float>(rng.uniform01());
        probes.push_back(std::move(t));
    }
    return probes;
}

}  // namespace herb::modelpack
