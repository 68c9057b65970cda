#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "herb/modelpack/quantize.hpp"
#include "herb/train/head.hpp"

namespace herb::cli {

namespace fs = std::filesystem;

// Where backbone weights come from: a model package or a seeded TinyDenseNet.
struct BackboneSource {
    fs::path package;
    std::optional<std::uint64_t> tiny_seed;
};

struct IngestOptions {
    fs::path root;
    fs::path out;
    fs::path rejects;
    bool force = false;
};

struct SplitOptions {
    fs::path manifest;
    fs::path out;
    std::vector<double> ratios{0.75, 0.125, 0.125};
    std::uint64_t seed = 0;
    bool force = false;
};

struct AugmentPreviewOptions {
    fs::path manifest;
    fs::path out_dir;
    fs::path spec;
    std::size_t count = 4;
    std::uint64_t seed = 0;
    bool force = false;
};

struct ExtractOptions {
    fs::path manifest;
    fs::path out;
    BackboneSource backbone;
    std::size_t batch = 4;
    bool force = false;
};

struct TrainOptions {
    fs::path features;
    fs::path out;
    fs::path report;
    train::TrainConfig config;
    bool force = false;
};

struct EvalOptions {
    fs::path model;
    fs::path manifest;
    std::string split = "test";
    fs::path out;
    fs::path csv;
    fs::path svg_dir;
    std::size_t batch = 4;
    bool force = false;
};

struct ExportOptions {
    fs::path head;
    fs::path out;
    BackboneSource backbone;
    std::string quantization = "none";
    std::string herb_info;
    std::string name;
    bool force = false;
};

struct VerifyOptions {
    fs::path model;
    fs::path reference;
    std::size_t probes = 10;
    std::uint64_t seed = 0;
};

struct ServeOptions {
    fs::path model;
    fs::path herb_info;
    std::string bind = "127.0.0.1:8080";
    std::size_t k = 5;
    int threads = 8;
};

struct PredictOptions {
    fs::path model;
    fs::path image;
    fs::path herb_info;
    std::optional<std::size_t> k;
};

struct DumpOptions {
    fs::path model;
    std::optional<std::uint64_t> tiny_seed;
    std::size_t classes = 3;
    fs::path image;
    fs::path out_dir;
    bool force = false;
};

// Each returns the process exit code; runtime failures throw.
int run_ingest(const IngestOptions& o);
int run_split(const SplitOptions& o);
int run_augment_preview(const AugmentPreviewOptions& o);
int run_extract(const ExtractOptions& o);
int run_train(const TrainOptions& o);
int run_eval(const EvalOptions& o);
int run_export(const ExportOptions& o);
int run_verify(const VerifyOptions& o);
int run_serve(const ServeOptions& o);
int run_predict(const PredictOptions& o);
int run_dump(const DumpOptions& o);

}  // namespace herb::cli
