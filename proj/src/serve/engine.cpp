#include "herb/serve/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "herb/common/image.hpp"
#include "herb/nnrt/forward.hpp"

namespace herb::serve {

namespace fs = std::filesystem;

nlohmann::json to_json(const PredictResponse& r) {
    nlohmann::json topk = nlohmann::json::array();
    for (const auto& e : r.topk) {
        nlohmann::json j{{"class_index", e.class_index}, {"scientific_name", e.scientific_name}, {"confidence", e.confidence}};
        if (e.info) {
            j["info"] = *e.info;
        } else {
            j["info_missing"] = true;
        }
        topk.push_back(std::move(j));
    }
    return {{"topk", topk}, {"model_name", r.model_name}, {"latency_ms", r.latency_ms}};
}

Engine::Engine(modelpack::Package package, dataset::HerbInfoStore herbs, std::uint32_t package_crc32)
    : package_(std::move(package)), herbs_(std::move(herbs)), package_crc32_(package_crc32) {
    nnrt::check_weights(package_.graph, package_.weights);
    const auto& shape = package_.graph.input_shape;
    if (shape[0] != dataset::StandardImage::kChannels || shape[1] != dataset::StandardImage::kSize ||
        shape[2] != dataset::StandardImage::kSize) {
        throw std::invalid_argument("model input must be 3x256x256");
    }
}

Engine Engine::load(const fs::path& package, const fs::path& herb_info) {
    const auto bytes = read_file_bytes(package);
    modelpack::Package pkg = modelpack::deserialize(bytes);
    if (!pkg.checksum_failures.empty()) {
        throw std::runtime_error("package " + package.string() + " failed checksum for tensor " +
                                 pkg.checksum_failures.front());
    }
    fs::path info_path = herb_info;
    if (info_path.empty() && !pkg.herb_info.empty()) {
        info_path = fs::path(pkg.herb_info).is_absolute() ? fs::path(pkg.herb_info)
                                                          : package.parent_path() / pkg.herb_info;
    }
    dataset::HerbInfoStore store;
    if (!info_path.empty()) store = dataset::load_herb_info(info_path);
    Engine engine(std::move(pkg), std::move(store), modelpack::crc32_of(bytes));
    const auto missing = engine.missing_info();
    if (!missing.empty()) {
        std::cerr << "warning: no herb info for " << missing.size() << " of " << engine.num_classes()
                  << " classes (first: " << missing.front() << ")\n";
    }
    return engine;
}

std::vector<std::string> Engine::missing_info() const {
    std::vector<std::string> out;
    for (const auto& label : package_.class_labels) {
        if (!herbs_.contains(label)) out.push_back(label);
    }
    return out;
}

std::vector<double> Engine::probabilities(const dataset::StandardImage& image) const {
    const Tensor batch = image.tensor().reshaped({1, 3, dataset::StandardImage::kSize, dataset::StandardImage::kSize});
    const Tensor p = nnrt::predict_proba(package_.graph, package_.weights, batch);
    std::vector<double> out(p.values().begin(), p.values().end());
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& v : out) v /= sum;
    return out;
}

PredictResponse Engine::predict(const dataset::StandardImage& image, std::size_t k) const {
    const auto start = std::chrono::steady_clock::now();
    if (k < 1 || k > num_classes()) {
        throw RequestError(400, "k must be between 1 and " + std::to_string(num_classes()) + ", got " +
                                    std::to_string(k));
    }
    const auto probs = probabilities(image);
    PredictResponse r;
    r.model_name = model_name();
    for (std::size_t index : top_k_indices(probs, k)) {
        TopKEntry e;
        e.class_index = index;
        e.scientific_name = package_.class_labels[index];
        e.confidence = probs[index];
        e.info = herbs_.lookup(e.scientific_name);
        r.topk.push_back(std::move(e));
    }
    r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

PredictResponse Engine::predict(std::span<const std::uint8_t> image_bytes, std::size_t k) const {
    const auto start = std::chrono::steady_clock::now();
    if (k < 1 || k > num_classes()) {
        throw RequestError(400, "k must be between 1 and " + std::to_string(num_classes()) + ", got " +
                                    std::to_string(k));
    }
    dataset::StandardImage image;
    try {
        image = dataset::standardize(decode_image(image_bytes));
    } catch (const std::exception& e) {
        throw RequestError(400, std::string("cannot decode image: ") + e.what());
    }
    PredictResponse r = predict(image, k);
    r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<std::size_t> top_k_indices(std::span<const double> confidences, std::size_t k) {
    std::vector<std::size_t> order(confidences.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return confidences[a] != confidences[b] ? confidences[a] > confidences[b] : a < b;
                      });
    order.resize(k);
    return order;
}

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int sextet(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+' || c == '-') return 62;
    if (c == '/' || c == '_') return 63;
    return -1;
}

}  // namespace

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    // Accept data URLs from browsers.
    if (text.starts_with("data:")) {
        const auto comma = text.find(',');
        if (comma == std::string_view::npos) throw std::invalid_argument("malformed data URL");
        text.remove_prefix(comma + 1);
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() * 3 / 4);
    std::uint32_t acc = 0;
    int bits = 0;
    std::size_t padding = 0;
    for (char c : text) {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
        if (c == '=') {
            ++padding;
            continue;
        }
        if (padding > 0) throw std::invalid_argument("base64 data after padding");
        const int v = sextet(c);
        if (v < 0) throw std::invalid_argument("invalid base64 character");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
        }
    }
    if (bits >= 6 || padding > 2) throw std::invalid_argument("truncated base64 data");
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        const std::uint32_t b0 = bytes[i];
        const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
        const std::uint32_t v = (b0 << 16) | (b1 << 8) | b2;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
        out += i + 2 < bytes.size() ? kAlphabet[v & 63] : '=';
    }
    return out;
}

std::string crc_hex(std::uint32_t crc) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc);
    return buf;
}

}  // namespace herb::serve
