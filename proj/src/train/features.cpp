#include "herb/train/features.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "herb/common/image.hpp"
#include "herb/common/le_bytes.hpp"
#include "herb/dataset/standardize.hpp"
#include "herb/nnrt/forward.hpp"
#include "herb/train/head.hpp"

namespace herb::train {

namespace fs = std::filesystem;
using dataset::Split;

namespace {

constexpr char kMagic[4] = {'H', 'F', 'T', 'C'};

std::size_t label_of(const dataset::DatasetManifest& manifest, const dataset::ImageRecord& r) {
    const auto index = manifest.class_index(r.class_label);
    if (!index) throw std::invalid_argument("record " + r.id + " has unknown label '" + r.class_label + "'");
    return *index;
}

// Runs `fn(batch, first_row)` over standardized images of `records` in chunks.
template <class Fn>
void for_each_batch(const std::vector<const dataset::ImageRecord*>& records, std::size_t batch_size, Fn&& fn) {
    batch_size = std::max<std::size_t>(1, batch_size);
    for (std::size_t start = 0; start < records.size(); start += batch_size) {
        const std::size_t end = std::min(records.size(), start + batch_size);
        std::vector<dataset::StandardImage> images;
        images.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            images.push_back(dataset::standardize(read_image(records[i]->source_path)));
        }
        fn(dataset::make_batch(images), start);
    }
}

}  // namespace

FeatureSet FeatureSet::subset(Split split) const {
    FeatureSet out;
    out.classes = classes;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        if (splits[i] == split) rows.push_back(i);
    }
    const std::size_t d = dim();
    out.features = Tensor({static_cast<std::int64_t>(rows.size()), static_cast<std::int64_t>(d)});
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t i = rows[k];
        std::copy_n(features.data() + i * d, d, out.features.data() + k * d);
        out.ids.push_back(ids[i]);
        out.labels.push_back(labels[i]);
        out.splits.push_back(splits[i]);
    }
    return out;
}

FeatureSet extract_manifest_features(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights,
                                     const dataset::DatasetManifest& manifest, std::size_t batch_size,
                                     const ProgressFn& progress) {
    const auto shapes = nnrt::infer_shapes(graph);
    const auto& boundary_shape = shapes.at(graph.head_boundary);
    if (boundary_shape.size() != 1) {
        throw std::invalid_argument("head boundary " + graph.head_boundary + " is not a vector output");
    }
    const std::int64_t d = boundary_shape[0];

    std::vector<const dataset::ImageRecord*> records;
    FeatureSet set;
    set.classes = manifest.classes;
    for (const auto& r : manifest.records) {
        records.push_back(&r);
        set.ids.push_back(r.id);
        set.labels.push_back(label_of(manifest, r));
        set.splits.push_back(r.split);
    }
    set.features = Tensor({static_cast<std::int64_t>(records.size()), d});
    for_each_batch(records, batch_size, [&](const Tensor& batch, std::size_t first) {
        const Tensor f = nnrt::extract_features(graph, weights, batch);
        std::copy(f.data(), f.data() + f.size(), set.features.data() + first * static_cast<std::size_t>(d));
        if (progress) progress(first + static_cast<std::size_t>(batch.dim(0)), records.size());
    });
    return set;
}

fs::path sidecar_path(const fs::path& cache) {
    fs::path p = cache;
    p += ".json";
    return p;
}

void save_feature_cache(const fs::path& path, const FeatureSet& set) {
    if (set.features.rank() != 2 || static_cast<std::size_t>(set.features.dim(0)) != set.size() ||
        set.labels.size() != set.size() || set.splits.size() != set.size()) {
        throw std::invalid_argument("feature set columns disagree in length");
    }
    std::vector<std::uint8_t> bytes(kMagic, kMagic + 4);
    put_u32(bytes, kFeatureCacheVersion);
    put_u64(bytes, static_cast<std::uint64_t>(set.features.dim(0)));
    put_u64(bytes, static_cast<std::uint64_t>(set.features.dim(1)));
    bytes.reserve(bytes.size() + set.features.size() * 4);
    for (float v : set.features.values()) put_f32(bytes, v);
    write_file_bytes(path, bytes);

    nlohmann::json splits = nlohmann::json::array();
    for (Split s : set.splits) splits.push_back(dataset::to_string(s));
    const nlohmann::json sidecar{{"n", set.size()},           {"d", set.dim()},   {"classes", set.classes},
                                 {"ids", set.ids},            {"labels", set.labels}, {"splits", splits}};
    std::ofstream out(sidecar_path(path), std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + sidecar_path(path).string());
    out << sidecar.dump() << '\n';
}

FeatureSet load_feature_cache(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    FeatureSet set;
    try {
        ByteReader in(bytes);
        if (!std::equal(kMagic, kMagic + 4, in.take(4))) throw std::runtime_error("bad magic");
        const std::uint32_t version = in.u32();
        if (version != kFeatureCacheVersion) throw std::runtime_error("unsupported version " + std::to_string(version));
        const std::uint64_t n = in.u64();
        const std::uint64_t d = in.u64();
        if (d != 0 && n > in.remaining() / 4 / d) throw std::runtime_error("size mismatch");
        if (n * d * 4 != in.remaining()) throw std::runtime_error("size mismatch");
        set.features = Tensor({static_cast<std::int64_t>(n), static_cast<std::int64_t>(d)});
        const std::uint8_t* p = in.take(n * d * 4);
        for (std::size_t i = 0; i < n * d; ++i) set.features[i] = get_f32(p + 4 * i);
    } catch (const std::exception& e) {
        throw std::runtime_error("feature cache " + path.string() + ": " + e.what());
    }

    std::ifstream side(sidecar_path(path));
    if (!side) throw std::runtime_error("missing feature sidecar " + sidecar_path(path).string());
    try {
        const auto doc = nlohmann::json::parse(side);
        set.classes = doc.at("classes").get<std::vector<std::string>>();
        set.ids = doc.at("ids").get<std::vector<std::string>>();
        set.labels = doc.at("labels").get<std::vector<std::size_t>>();
        for (const auto& s : doc.at("splits")) set.splits.push_back(dataset::parse_split(s.get<std::string>()));
    } catch (const std::exception& e) {
        throw std::runtime_error("feature sidecar " + sidecar_path(path).string() + ": " + e.what());
    }
    const auto n = static_cast<std::size_t>(set.features.dim(0));
    if (set.ids.size() != n || set.labels.size() != n || set.splits.size() != n) {
        throw std::runtime_error("feature sidecar row count does not match cache");
    }
    for (std::size_t y : set.labels) {
        if (y >= set.classes.size()) throw std::runtime_error("feature sidecar label out of range");
    }
    return set;
}

SplitEvaluation evaluate_on_split(const nnrt::ModelGraph& graph, const nnrt::WeightStore& weights,
                                  const dataset::DatasetManifest& manifest, Split split, std::size_t batch_size) {
    const auto records = manifest.records_in(split);
    if (records.empty()) {
        throw std::invalid_argument("split '" + std::string(dataset::to_string(split)) + "' is empty");
    }
    const std::int64_t c = graph.num_classes();
    if (static_cast<std::size_t>(c) != manifest.classes.size()) {
        throw std::invalid_argument("model has " + std::to_string(c) + " classes, manifest has " +
                                    std::to_string(manifest.classes.size()));
    }
    SplitEvaluation out;
    out.probs = Tensor({static_cast<std::int64_t>(records.size()), c});
    for (const auto* r : records) {
        out.labels.push_back(label_of(manifest, *r));
        out.ids.push_back(r->id);
    }
    for_each_batch(records, batch_size, [&](const Tensor& batch, std::size_t first) {
        const Tensor p = nnrt::predict_proba(graph, weights, batch);
        std::copy(p.data(), p.data() + p.size(), out.probs.data() + first * static_cast<std::size_t>(c));
    });
    out.loss = cross_entropy_loss(out.probs, out.labels);
    out.accuracy = accuracy(out.probs, out.labels);
    return out;
}

}  // namespace herb::train
