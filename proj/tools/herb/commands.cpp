#include "commands.hpp"

#include <csignal>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "herb/augment/pipeline.hpp"
#include "herb/common/image.hpp"
#include "herb/dataset/ingest.hpp"
#include "herb/dataset/split.hpp"
#include "herb/dataset/standardize.hpp"
#include "herb/eval/report.hpp"
#include "herb/modelpack/package.hpp"
#include "herb/nnrt/activations.hpp"
#include "herb/nnrt/tiny_densenet.hpp"
#include "herb/serve/server.hpp"
#include "herb/train/features.hpp"

namespace herb::cli {

using nlohmann::json;

namespace {

bool skip_existing(const fs::path& out, bool force) {
    if (force || !fs::exists(out)) return false;
    std::cerr << "skip: " << out.string() << " exists (use --force to overwrite)\n";
    return true;
}

void write_json(const fs::path& path, const json& doc) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

nnrt::Model load_backbone(const BackboneSource& source, std::size_t classes) {
    if (!source.package.empty()) {
        auto pkg = modelpack::read_package(source.package);
        return {std::move(pkg.graph), std::move(pkg.weights)};
    }
    if (!source.tiny_seed) throw std::runtime_error("no backbone given: pass --backbone or --tiny-seed");
    return nnrt::make_tiny_densenet(static_cast<std::int64_t>(classes), *source.tiny_seed);
}

}  // namespace

int run_ingest(const IngestOptions& o) {
    if (skip_existing(o.out, o.force)) return 0;
    const auto result = dataset::ingest_directory(o.root);
    dataset::write_manifest(o.out, result.manifest);
    const fs::path rejects = o.rejects.empty() ? fs::path(o.out.string() + ".rejects.jsonl") : o.rejects;
    dataset::write_rejects(rejects, result.rejects);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    std::cerr << "ingest: " << result.manifest.records.size() << " records in " << result.manifest.classes.size()
              << " classes, " << result.rejects.size() << " rejected\n";
    return 0;
}

int run_split(const SplitOptions& o) {
    const fs::path out = o.out.empty() ? o.manifest : o.out;
    auto manifest = dataset::read_manifest(o.manifest);
    const bool in_place = fs::exists(out) && fs::equivalent(out, o.manifest);
    const bool assigned = !manifest.records.empty() &&
                          std::none_of(manifest.records.begin(), manifest.records.end(),
                                       [](const auto& r) { return r.split == dataset::Split::unassigned; });
    if (!o.force && ((in_place && assigned) || (!in_place && fs::exists(out)))) {
        std::cerr << "skip: " << out.string() << " is already split (use --force to redo)\n";
        return 0;
    }
    if (o.ratios.size() != 3) throw std::invalid_argument("--ratios needs three values");
    dataset::SplitSpec spec{{o.ratios[0], o.ratios[1], o.ratios[2]}, o.seed};
    manifest = dataset::stratified_split(manifest, spec);
    dataset::write_manifest(out, manifest);
    const auto t = dataset::tally(manifest);
    std::cout << json{{"train", t.train}, {"validation", t.validation}, {"test", t.test}}.dump() << '\n';
    return 0;
}

int run_augment_preview(const AugmentPreviewOptions& o) {
    if (skip_existing(o.out_dir, o.force)) return 0;
    augment::AugmentSpec spec;
    if (!o.spec.empty()) spec = read_json(o.spec).get<augment::AugmentSpec>();
    augment::validate(spec);
    const auto manifest = dataset::read_manifest(o.manifest);
    auto records = manifest.records_in(dataset::Split::train);
    if (records.empty()) {
        for (const auto& r : manifest.records) records.push_back(&r);
    }
    fs::create_directories(o.out_dir);
    std::size_t written = 0;
    for (const auto* r : records) {
        if (written == o.count) break;
        const auto before = dataset::standardize(read_image(r->source_path));
        Rng rng(o.seed, stream_id(r->id));
        const auto aug = augment::sample_pipeline(spec, rng);
        const auto after = augment::apply(aug, before);
        const std::string stem = eval::slug(r->id);
        write_png(o.out_dir / (stem + "_before.png"), dataset::to_raw_image(before));
        write_png(o.out_dir / (stem + "_after.png"), dataset::to_raw_image(after));
        write_json(o.out_dir / (stem + "_ops.json"), augment::to_json(aug));
        ++written;
    }
    std::cerr << "augment-preview: " << written << " pairs in " << o.out_dir.string() << '\n';
    return 0;
}

int run_extract(const ExtractOptions& o) {
    if (skip_existing(o.out, o.force)) return 0;
    const auto manifest = dataset::read_manifest(o.manifest);
    const auto model = load_backbone(o.backbone, manifest.classes.size());
    const auto set = train::extract_manifest_features(model.graph, model.weights, manifest, o.batch,
                                                      [](std::size_t done, std::size_t total) {
                                                          std::cerr << "\rextract-features: " << done << "/" << total
                                                                    << std::flush;
                                                      });
    std::cerr << '\n';
    train::save_feature_cache(o.out, set);
    std::cerr << "extract-features: " << set.size() << " x " << set.dim() << " -> " << o.out.string() << '\n';
    return 0;
}

int run_train(const TrainOptions& o) {
    if (skip_existing(o.out, o.force)) return 0;
    const auto set = train::load_feature_cache(o.features);
    const auto tr = set.subset(dataset::Split::train);
    const auto va = set.subset(dataset::Split::validation);
    const auto result = train::train_head(tr.features, tr.labels, va.features, va.labels, set.classes.size(), o.config);
    json head = train::to_json(result.head);
    head["labels"] = set.classes;
    write_json(o.out, head);
    json report = train::to_json(result.report);
    report["config"] = train::to_json(o.config);
    if (!o.report.empty()) write_json(o.report, report);
    const auto best = result.report.best_epoch - 1;
    std::cerr << "train-head: " << result.report.epochs() << " epochs, best " << result.report.best_epoch
              << " (train acc " << result.report.train_accuracy[best] << ", val acc "
              << result.report.val_accuracy[best] << ", val loss " << result.report.val_loss[best] << ")\n";
    return 0;
}

int run_eval(const EvalOptions& o) {
    if (skip_existing(o.out, o.force)) return 0;
    const auto pkg = modelpack::read_package(o.model);
    const auto manifest = dataset::read_manifest(o.manifest);
    if (manifest.classes != pkg.class_labels) {
        throw std::runtime_error("manifest classes do not match the model's class labels");
    }
    const auto split = dataset::parse_split(o.split);
    const auto ev = train::evaluate_on_split(pkg.graph, pkg.weights, manifest, split, o.batch);
    const auto report = eval::build_report(ev.probs, ev.labels, ev.loss, pkg.class_labels, o.split);
    eval::emit(report, eval::EmitFormat::json, o.out);
    if (!o.csv.empty()) eval::emit(report, eval::EmitFormat::csv, o.csv);
    if (!o.svg_dir.empty()) eval::emit(report, eval::EmitFormat::svg, o.svg_dir);
    std::cerr << "eval (" << o.split << ", n=" << report.samples << "): accuracy " << report.accuracy << ", loss "
              << report.loss << ", auc_macro " << report.auc_macro << ", f1_macro " << report.f1_macro << '\n';
    return 0;
}

int run_export(const ExportOptions& o) {
    if (skip_existing(o.out, o.force)) return 0;
    const json doc = read_json(o.head);
    const auto head = train::head_from_json(doc);
    std::vector<std::string> labels = doc.value("labels", std::vector<std::string>{});
    if (labels.empty()) {
        for (std::size_t i = 0; i < head.classes; ++i) labels.push_back(std::to_string(i));
    }
    auto model = load_backbone(o.backbone, head.classes);
    if (static_cast<std::size_t>(model.graph.num_classes()) != head.classes) {
        throw std::runtime_error("backbone has a " + std::to_string(model.graph.num_classes()) +
                                 "-way head, trained head has " + std::to_string(head.classes) + " classes");
    }
    train::install_head(model.graph, model.weights, head);
    if (!o.name.empty()) model.graph.name = o.name;
    const auto bytes = modelpack::serialize(model.graph, model.weights, labels,
                                            modelpack::parse_quant_mode(o.quantization), o.herb_info);
    modelpack::write_package(o.out, bytes);
    std::cerr << "export: " << bytes.size() << " bytes (" << o.quantization << ") -> " << o.out.string() << '\n';
    return 0;
}

int run_verify(const VerifyOptions& o) {
    const auto bytes = read_file_bytes(o.model);
    nnrt::Model reference;
    if (!o.reference.empty()) {
        auto ref = modelpack::read_package(o.reference);
        reference = {std::move(ref.graph), std::move(ref.weights)};
    } else {
        try {
            auto self = modelpack::deserialize(bytes);
            reference = {std::move(self.graph), std::move(self.weights)};
        } catch (const modelpack::PackageError&) {
        }
    }
    const auto probes = reference.graph.layers.empty() ? std::vector<Tensor>{}
                                                       : modelpack::random_probes(reference.graph, o.probes, o.seed);
    const auto r = modelpack::verify_package(bytes, reference.graph, reference.weights, probes);
    json out{{"probes", r.probes},
             {"max_abs_deviation", r.max_abs_deviation},
             {"top1_agreement", r.top1_agreement},
             {"checksum_failures", r.checksum_failures},
             {"ok", r.ok()}};
    if (r.error) out["error"] = *r.error;
    std::cout << out.dump(2) << '\n';
    return r.ok() ? 0 : 2;
}

int run_serve(const ServeOptions& o) {
    serve::ServeConfig config;
    config.model = o.model;
    config.herb_info = o.herb_info;
    config.default_k = o.k;
    config.threads = o.threads;
    serve::parse_bind(o.bind, config);
    if (config.model.empty()) throw std::invalid_argument("serve needs --model or HERB_MODEL");

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    serve::Server server(config);
    server.start();
    std::cerr << "serve: listening on http://" << config.host << ":" << server.port() << '\n';
    int received = 0;
    sigwait(&signals, &received);
    std::cerr << "serve: shutting down\n";
    server.stop();
    return 0;
}

int run_predict(const PredictOptions& o) {
    const auto engine = serve::Engine::load(o.model, o.herb_info);
    const auto bytes = read_file_bytes(o.image);
    try {
        std::cout << serve::to_json(engine.predict(bytes, o.k.value_or(engine.default_k()))).dump(2) << '\n';
    } catch (const serve::RequestError& e) {
        throw std::runtime_error(e.what());
    }
    return 0;
}

int run_dump(const DumpOptions& o) {
    if (skip_existing(o.out_dir, o.force)) return 0;
    nnrt::Model model;
    if (!o.model.empty()) {
        auto pkg = modelpack::read_package(o.model);
        model = {std::move(pkg.graph), std::move(pkg.weights)};
    } else {
        model = load_backbone({{}, o.tiny_seed}, o.classes);
    }
    const auto image = dataset::standardize(read_image(o.image));
    const Tensor batch = image.tensor().reshaped({1, 3, dataset::StandardImage::kSize, dataset::StandardImage::kSize});
    const auto files = nnrt::dump_activations(model.graph, model.weights, batch, o.out_dir);
    std::cerr << "dump-activations: " << files.size() << " layers -> " << o.out_dir.string() << '\n';
    return 0;
}

}  // namespace herb::cli
