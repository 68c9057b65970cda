#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config_json.hpp"

using namespace herb::cli;

namespace {

void add_backbone(CLI::App* sub, BackboneSource& source) {
    auto* pkg = sub->add_option("--backbone", source.package, "Model package providing the backbone");
    auto* seed = sub->add_option("--tiny-seed", source.tiny_seed, "Use a TinyDenseNet with random weights from this seed");
    pkg->excludes(seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Herb image classification toolkit"};
    app.name("herb");
    app.config_formatter(std::make_shared<ConfigJSON>());
    app.set_config("--config", "", "JSON config file; a section per subcommand");
    app.require_subcommand(1);

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Scan a class-per-directory image tree into a manifest");
    c_ingest->add_option("--root", ingest.root, "Dataset root")->required();
    c_ingest->add_option("--out", ingest.out, "Manifest (JSON lines)")->required();
    c_ingest->add_option("--rejects", ingest.rejects, "Rejects report (default <out>.rejects.jsonl)");
    c_ingest->add_flag("--force", ingest.force, "Overwrite existing outputs");

    SplitOptions split;
    auto* c_split = app.add_subcommand("split", "Stratified train/validation/test assignment");
    c_split->add_option("--manifest", split.manifest, "Input manifest")->required();
    c_split->add_option("--out", split.out, "Output manifest (default: rewrite input)");
    c_split->add_option("--ratios", split.ratios, "train,validation,test fractions")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    c_split->add_option("--seed", split.seed, "Shuffle seed")->capture_default_str();
    c_split->add_flag("--force", split.force, "Redo an existing split");

    AugmentPreviewOptions preview;
    auto* c_preview = app.add_subcommand("augment-preview", "Write before/after PNG pairs for sampled augmentations");
    c_preview->add_option("--manifest", preview.manifest, "Manifest")->required();
    c_preview->add_option("--out-dir", preview.out_dir, "Output directory")->required();
    c_preview->add_option("--spec", preview.spec, "Augmentation spec JSON (default: built-in ranges)");
    c_preview->add_option("--count", preview.count, "Number of images")->capture_default_str();
    c_preview->add_option("--seed", preview.seed, "Sampling seed")->capture_default_str();
    c_preview->add_flag("--force", preview.force, "Overwrite existing outputs");

    ExtractOptions extract;
    auto* c_extract = app.add_subcommand("extract-features", "Run images through the frozen backbone");
    c_extract->add_option("--manifest", extract.manifest, "Manifest")->required();
    c_extract->add_option("--out", extract.out, "Feature cache (.hftc)")->required();
    add_backbone(c_extract, extract.backbone);
    c_extract->add_option("--batch", extract.batch, "Images per forward pass")->capture_default_str();
    c_extract->add_flag("--force", extract.force, "Overwrite existing outputs");

    TrainOptions trainer;
    auto* c_train = app.add_subcommand("train-head", "Fit the softmax head on cached features");
    c_train->add_option("--features", trainer.features, "Feature cache")->required();
    c_train->add_option("--out", trainer.out, "Head parameters (JSON)")->required();
    c_train->add_option("--report", trainer.report, "Training report (JSON)");
    c_train->add_option("--learning-rate", trainer.config.learning_rate)->capture_default_str();
    c_train->add_option("--momentum", trainer.config.momentum)->capture_default_str();
    c_train->add_option("--l2-lambda", trainer.config.l2_lambda)->capture_default_str();
    c_train->add_option("--dropout", trainer.config.dropout_p)->capture_default_str();
    c_train->add_option("--batch-size", trainer.config.batch_size)->capture_default_str();
    c_train->add_option("--max-epochs", trainer.config.max_epochs)->capture_default_str();
    c_train->add_option("--patience", trainer.config.patience)->capture_default_str();
    c_train->add_option("--seed", trainer.config.seed)->capture_default_str();
    c_train->add_option("--standardize-features", trainer.config.standardize_features,
                        "Train on z-scored features")
        ->capture_default_str();
    c_train->add_flag("--force", trainer.force, "Overwrite existing outputs");

    EvalOptions ev;
    auto* c_eval = app.add_subcommand("eval", "Evaluate a model package on one split");
    c_eval->add_option("--model", ev.model, "Model package")->required();
    c_eval->add_option("--manifest", ev.manifest, "Manifest")->required();
    c_eval->add_option("--split", ev.split, "train, validation, or test")
        ->check(CLI::IsMember({"train", "validation", "test"}))
        ->capture_default_str();
    c_eval->add_option("--out", ev.out, "Report (JSON)")->required();
    c_eval->add_option("--csv", ev.csv, "Confusion matrix CSV (ROC CSVs go next to it)");
    c_eval->add_option("--svg-dir", ev.svg_dir, "Directory for per-class ROC plots");
    c_eval->add_option("--batch", ev.batch, "Images per forward pass")->capture_default_str();
    c_eval->add_flag("--force", ev.force, "Overwrite existing outputs");

    ExportOptions exporter;
    auto* c_export = app.add_subcommand("export", "Write a model package from a backbone and a trained head");
    c_export->add_option("--head", exporter.head, "Head parameters (JSON)")->required();
    c_export->add_option("--out", exporter.out, "Package path")->required();
    add_backbone(c_export, exporter.backbone);
    c_export->add_option("--quantization", exporter.quantization, "none, f16, or i8")
        ->check(CLI::IsMember({"none", "f16", "i8", "i8_per_tensor_affine"}))
        ->capture_default_str();
    c_export->add_option("--herb-info", exporter.herb_info, "Herb-info path recorded in the package");
    c_export->add_option("--name", exporter.name, "Model name");
    c_export->add_flag("--force", exporter.force, "Overwrite existing outputs");

    VerifyOptions verify;
    auto* c_verify = app.add_subcommand("verify", "Check a package and compare it against a reference");
    c_verify->add_option("--model", verify.model, "Package to check")->required();
    c_verify->add_option("--reference", verify.reference, "Reference package (e.g. the unquantized export)");
    c_verify->add_option("--probes", verify.probes, "Number of random probe images")->capture_default_str();
    c_verify->add_option("--seed", verify.seed, "Probe seed")->capture_default_str();

    ServeOptions srv;
    auto* c_serve = app.add_subcommand("serve", "Run the local HTTP inference service");
    c_serve->add_option("--model", srv.model, "Model package")->envname("HERB_MODEL");
    c_serve->add_option("--herb-info", srv.herb_info, "Herb-info JSON")->envname("HERB_INFO");
    c_serve->add_option("--bind", srv.bind, "host:port")->envname("HERB_BIND")->capture_default_str();
    c_serve->add_option("--k", srv.k, "Default top-k")->capture_default_str();
    c_serve->add_option("--threads", srv.threads, "Worker threads")->capture_default_str();

    PredictOptions pred;
    auto* c_predict = app.add_subcommand("predict", "Classify one image file");
    c_predict->add_option("--model", pred.model, "Model package")->required()->envname("HERB_MODEL");
    c_predict->add_option("--image", pred.image, "PNG or JPEG file")->required();
    c_predict->add_option("--herb-info", pred.herb_info, "Herb-info JSON")->envname("HERB_INFO");
    c_predict->add_option("--k", pred.k, "Number of classes to return (default 5, capped at the class count)");

    DumpOptions dump;
    auto* c_dump = app.add_subcommand("dump-activations", "Write one activation grid PNG per layer");
    auto* dump_model = c_dump->add_option("--model", dump.model, "Model package");
    auto* dump_seed = c_dump->add_option("--tiny-seed", dump.tiny_seed, "Use a seeded TinyDenseNet instead");
    dump_model->excludes(dump_seed);
    c_dump->add_option("--classes", dump.classes, "Class count for --tiny-seed")->capture_default_str();
    c_dump->add_option("--image", dump.image, "Input image")->required();
    c_dump->add_option("--out-dir", dump.out_dir, "Output directory")->required();
    c_dump->add_flag("--force", dump.force, "Overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        if (app.get_subcommands().empty()) std::cerr << '\n' << app.help();
        return 1;
    }

    try {
        if (c_ingest->parsed()) return run_ingest(ingest);
        if (c_split->parsed()) return run_split(split);
        if (c_preview->parsed()) return run_augment_preview(preview);
        if (c_extract->parsed()) return run_extract(extract);
        if (c_train->parsed()) return run_train(trainer);
        if (c_eval->parsed()) return run_eval(ev);
        if (c_export->parsed()) return run_export(exporter);
        if (c_verify->parsed()) return run_verify(verify);
        if (c_serve->parsed()) return run_serve(srv);
        if (c_predict->parsed()) return run_predict(pred);
        if (c_dump->parsed()) return run_dump(dump);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    std::cerr << app.help();
    return 1;
}
