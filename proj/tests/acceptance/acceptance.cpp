// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "herb/augment/pipeline.hpp"
#include "herb/dataset/herb_info.hpp"
#include "herb/dataset/split.hpp"
#include "herb/dataset/standardize.hpp"
#include "herb/eval/metrics.hpp"
#include "herb/modelpack/package.hpp"
#include "herb/nnrt/forward.hpp"
#include "herb/nnrt/kernels.hpp"
#include "herb/nnrt/tiny_densenet.hpp"
#include "herb/train/head.hpp"

using namespace herb;
using nlohmann::json;
namespace fs = std::filesystem;

extern char** environ;

namespace {

// A failed check; the message says what went wrong.
struct Failure {
    std::string what;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

struct Criterion {
    std::string name;
    double limit_s;
    std::function<std::string()> body;  // returns a short summary
};

// ---------------------------------------------------------------- split

std::string split_fidelity() {
    const auto manifest = fixtures::synthetic_manifest(60, 200);
    const auto out = dataset::stratified_split(manifest, {{0.75, 0.125, 0.125}, 11});
    const auto t = dataset::tally(out);
    expect(t.train == 9000 && t.validation == 1500 && t.test == 1500,
           "totals " + std::to_string(t.train) + "/" + std::to_string(t.validation) + "/" + std::to_string(t.test));
    expect(out.records.size() == manifest.records.size(), "record count changed");

    std::map<std::string, std::array<std::size_t, 3>> per_class;
    std::multiset<std::string> before, after;
    for (const auto& r : manifest.records) before.insert(r.id);
    for (const auto& r : out.records) {
        after.insert(r.id);
        switch (r.split) {
            case dataset::Split::train: ++per_class[r.class_label][0]; break;
            case dataset::Split::validation: ++per_class[r.class_label][1]; break;
            case dataset::Split::test: ++per_class[r.class_label][2]; break;
            default: throw Failure{"record " + r.id + " left unassigned"};
        }
    }
    expect(before == after, "ids are not a permutation of the input");
    expect(std::set<std::string>(after.begin(), after.end()).size() == after.size(), "duplicate ids");
    expect(per_class.size() == 60, "class count " + std::to_string(per_class.size()));
    for (const auto& [label, c] : per_class) {
        expect(c[0] == 150 && c[1] == 25 && c[2] == 25, label + " split is not 150/25/25");
    }
    return "9000/1500/1500, 150/25/25 in each of 60 classes";
}

// ---------------------------------------------------------------- gradients

long double reference_loss(const Tensor& f, const std::vector<std::size_t>& y, const train::HeadParams& h,
                           double lambda) {
    const std::size_t n = y.size(), d = h.dim;
    long double total = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<long double> z(h.classes);
        for (std::size_t c = 0; c < h.classes; ++c) {
            long double s = h.bias[c];
            for (std::size_t k = 0; k < d; ++k) s += static_cast<long double>(h.w(c, k)) * f[i * d + k];
            z[c] = s;
        }
        const long double m = *std::max_element(z.begin(), z.end());
        long double sum = 0.0L;
        for (auto v : z) sum += std::exp(v - m);
        total -= z[y[i]] - m - std::log(sum);
    }
    long double reg = 0.0L;
    for (double w : h.weight) reg += static_cast<long double>(w) * w;
    return total / n + lambda * reg;
}

std::string gradient_correctness() {
    Rng rng(31, 7);
    const double h = 1e-4;
    double worst = 0.0;
    std::size_t params = 0;
    for (int instance = 0; instance < 50; ++instance) {
        const std::size_t c = 2 + rng.below(9), d = 1 + rng.below(32), n = 1 + rng.below(16);
        const double lambda = rng.bernoulli(0.5) ? rng.uniform(0, 0.1) : 0.0;
        auto head = train::HeadParams::zeros(c, d);
        for (auto& w : head.weight) w = rng.uniform(-1, 1);
        for (auto& b : head.bias) b = rng.uniform(-1, 1);
        const auto f = fixtures::random_tensor({static_cast<std::int64_t>(n), static_cast<std::int64_t>(d)}, rng, -1, 1);
        std::vector<std::size_t> y(n);
        for (auto& v : y) v = rng.below(c);
        const auto g = train::head_gradients(f, y, head, lambda);
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const long double up = reference_loss(f, y, head, lambda);
            param = saved - h;
            const long double down = reference_loss(f, y, head, lambda);
            param = saved;
            const double numeric = static_cast<double>((up - down) / (2 * h));
            worst = std::max(worst, std::abs(numeric - analytic) /
                                        std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
            ++params;
        };
        for (std::size_t i = 0; i < head.weight.size(); ++i) check(head.weight[i], g.d_weight[i]);
        for (std::size_t i = 0; i < head.bias.size(); ++i) check(head.bias[i], g.d_bias[i]);
    }
    expect(worst < 1e-4, "max relative error " + std::to_string(worst));
    std::ostringstream s;
    s << "max relative error " << worst << " over " << params << " parameters";
    return s.str();
}

// ---------------------------------------------------------------- trainability

std::string trainability() {
    Rng rng(12, 3);
    const std::size_t classes = 3, dim = 16, per_class = 40;
    std::vector<std::vector<double>> centre(classes, std::vector<double>(dim));
    for (auto& c : centre)
        for (auto& v : c) v = rng.uniform(-2, 2);
    auto blobs = [&](std::size_t count, std::vector<std::size_t>& labels) {
        Tensor f({static_cast<std::int64_t>(classes * count), static_cast<std::int64_t>(dim)});
        for (std::size_t c = 0; c < classes; ++c)
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t row = labels.size();
                for (std::size_t k = 0; k < dim; ++k) f[row * dim + k] = static_cast<float>(centre[c][k] + 0.3 * rng.normal());
                labels.push_back(c);
            }
        return f;
    };
    std::vector<std::size_t> ytr, yva;
    const auto ftr = blobs(per_class, ytr);
    const auto fva = blobs(per_class / 2, yva);

    // Nearest-centre rule on the true centres confirms the set is separable.
    for (std::size_t i = 0; i < ytr.size(); ++i) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < classes; ++c) {
            double d2 = 0;
            for (std::size_t k = 0; k < dim; ++k) d2 += std::pow(ftr[i * dim + k] - centre[c][k], 2);
            if (d2 < best_d) best_d = d2, best = c;
        }
        expect(best == ytr[i], "fixture is not separable");
    }

    train::TrainConfig cfg;
    cfg.max_epochs = 200;
    const auto result = train::train_head(ftr, ytr, fva, yva, classes, cfg);
    const double acc = train::accuracy(train::head_predict(ftr, result.head), ytr);
    expect(result.report.epochs() <= 200, "ran " + std::to_string(result.report.epochs()) + " epochs");
    expect(acc >= 0.99, "train accuracy " + std::to_string(acc));
    return "train accuracy " + std::to_string(acc) + " after " + std::to_string(result.report.epochs()) + " epochs";
}

// ---------------------------------------------------------------- AUC

// Probability that a random positive outscores a random negative, ties counted half.
double mann_whitney(const std::vector<double>& s, const std::vector<bool>& pos) {
    double wins = 0;
    std::size_t np = 0, nn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (pos[i]) ++np; else ++nn;
        if (!pos[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (pos[j]) continue;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / (static_cast<double>(np) * static_cast<double>(nn));
}

std::string auc_oracle() {
    Rng rng(77, 1);
    double worst = 0.0;
    std::size_t with_ties = 0;
    for (int set = 0; set < 1000; ++set) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> s(n);
        std::vector<bool> pos(n);
        const bool coarse = rng.bernoulli(0.5);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(rng.below(6)) / 5.0 : rng.uniform01();
            pos[i] = rng.bernoulli(0.4);
        }
        pos[0] = true;
        pos[1] = false;
        if (std::set<double>(s.begin(), s.end()).size() < n) ++with_ties;
        const double a = eval::auc(eval::roc_curve(s, pos));
        worst = std::max(worst, std::abs(a - mann_whitney(s, pos)));
    }
    expect(worst <= 1e-9, "max difference " + std::to_string(worst));
    std::ostringstream out;
    out << "max |trapezoid - pair statistic| " << worst << ", " << with_ties << " sets with ties";
    return out.str();
}

// ---------------------------------------------------------------- softmax / loss

std::string softmax_invariants() {
    Rng rng(5, 9);
    double worst_sum = 0.0, worst_ce = 0.0;
    for (int v = 0; v < 10000; ++v) {
        const std::size_t c = 2 + rng.below(59);
        const double spread = rng.bernoulli(0.5) ? 1.0 : 30.0;
        Tensor z({1, static_cast<std::int64_t>(c)});
        for (float& x : z.values()) x = static_cast<float>(spread * rng.normal());
        const Tensor p = nnrt::softmax(z);
        double sum = 0.0;
        for (float x : p.values()) sum += x;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));

        Tensor shifted = z;
        const float shift = static_cast<float>(rng.uniform(-50, 50));
        for (float& x : shifted.values()) x += shift;
        const auto a = nnrt::argmax_rows(p);
        const auto b = nnrt::argmax_rows(nnrt::softmax(shifted));
        const auto raw = static_cast<std::size_t>(std::max_element(z.data(), z.data() + c) - z.data());
        const auto shifted_raw = static_cast<std::size_t>(std::max_element(shifted.data(), shifted.data() + c) - shifted.data());
        expect(a[0] == raw, "softmax argmax differs from logit argmax");
        expect(b[0] == shifted_raw, "argmax not shift invariant");

        // Uniform prediction: a zero head gives equal logits for any features.
        const auto head = train::HeadParams::zeros(c, 4);
        const auto f = fixtures::random_tensor({3, 4}, rng, -1, 1);
        const std::vector<std::size_t> y{rng.below(c), rng.below(c), rng.below(c)};
        const double ce = train::head_gradients(f, y, head, 0.0).loss;
        worst_ce = std::max(worst_ce, std::abs(ce - std::log(static_cast<double>(c))));
    }
    expect(worst_sum <= 1e-6, "row sum error " + std::to_string(worst_sum));
    expect(worst_ce <= 1e-9, "uniform CE error " + std::to_string(worst_ce));
    std::ostringstream s;
    s << "row-sum error " << worst_sum << ", |CE - ln C| " << worst_ce;
    return s.str();
}

// ---------------------------------------------------------------- augmentation

bool in_unit_range(const Tensor& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

std::string augmentation_suite() {
    using namespace herb::augment;
    const AugmentSpec spec;
    std::size_t ops_applied = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng img_rng(seed, 100);
        const std::int64_t h = 16 + static_cast<std::int64_t>(img_rng.below(49));
        const std::int64_t w = 16 + static_cast<std::int64_t>(img_rng.below(49));
        const auto img = fixtures::random_tensor({3, h, w}, img_rng);

        Rng a(seed, 1), b(seed, 1);
        const auto aug_a = sample_pipeline(spec, a);
        const auto aug_b = sample_pipeline(spec, b);
        expect(aug_a == aug_b, "sampled pipelines differ for seed " + std::to_string(seed));
        const auto out_a = apply(aug_a, img);
        const auto out_b = apply(aug_b, img);
        expect(out_a == out_b, "outputs differ for seed " + std::to_string(seed));
        expect(out_a.shape() == img.shape(), "shape changed for seed " + std::to_string(seed));
        expect(in_unit_range(out_a), "values left [0,1] for seed " + std::to_string(seed));
        ops_applied += aug_a.ops.size();

        for (auto axis : {FlipAxis::vertical, FlipAxis::horizontal}) {
            expect(flip(flip(img, axis), axis) == img, "flip is not an involution");
            const auto once = flip(img, axis);
            expect(once.shape() == img.shape() && in_unit_range(once), "flip broke shape or range");
        }
        Rng noise_rng(seed, 2);
        expect(rotate(img, 0.0) == img, "rotate(0) is not exact");
        expect(multiply(img, 1.0) == img, "multiply(1) is not exact");
        expect(add_gaussian_noise(img, 0.0, noise_rng) == img, "noise(0) is not exact");
        expect(crop_resize(img, {}) == img, "crop(0) is not exact");
        expect(elastic(img, 0.0, 0.25, noise_rng) == img, "elastic(alpha 0) is not exact");
        Rng id_rng(seed, 3);
        expect(apply(sample_pipeline(identity_spec(), id_rng), img) == img, "identity spec changed the image");

        Rng p(seed, 4);
        const std::vector<Tensor> single{
            rotate(img, p.uniform(-45, 45)),
            add_gaussian_noise(img, p.uniform(0, 0.1), p),
            multiply(img, p.uniform(0.8, 1.2)),
            crop_resize(img, {p.uniform(0, 0.1), p.uniform(0, 0.1), p.uniform(0, 0.1), p.uniform(0, 0.1)}),
            elastic(img, p.uniform(0.5, 3.5), 0.25, p),
        };
        for (const auto& t : single) {
            expect(t.shape() == img.shape() && in_unit_range(t), "an operator broke shape or range");
        }
    }
    // Full-size standard images keep their invariants too.
    Rng rng(4, 4);
    const auto big = dataset::standardize(fixtures::shape_image(1, rng));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng s(seed, 5);
        const auto out = apply(sample_pipeline(spec, s), big);
        expect(dataset::is_standard_shape(out.tensor()) && dataset::values_in_unit_range(out.tensor()),
               "standard image broken");
    }
    return "100 seeds deterministic, " + std::to_string(ops_applied) + " sampled ops, identities exact";
}

// ---------------------------------------------------------------- package

std::string package_integrity() {
    auto model = nnrt::make_tiny_densenet(3, 1);
    Rng rng(77, 0);
    Tensor w({3, nnrt::kTinyFeatureWidth});
    for (float& v : w.values()) v = static_cast<float>(4.0 * rng.normal());
    model.weights.set(nnrt::kTinyHeadDense, "weight", w);
    const std::vector<std::string> labels{"Aloe vera", "Mentha spicata", "Psidium guajava"};

    const auto full = modelpack::serialize(model.graph, model.weights, labels, modelpack::QuantMode::none);
    const auto pkg = modelpack::deserialize(full);
    for (const auto& probe : modelpack::random_probes(model.graph, 10, 3)) {
        const auto a = nnrt::predict_proba(model.graph, model.weights, probe);
        const auto b = nnrt::predict_proba(pkg.graph, pkg.weights, probe);
        expect(a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0,
               "mode-none outputs are not bit-identical");
    }

    const auto half = modelpack::serialize(model.graph, model.weights, labels, modelpack::QuantMode::f16);
    const double ratio = static_cast<double>(half.size()) / static_cast<double>(full.size());
    Rng probe_rng(5, 5);
    std::vector<Tensor> probes;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto img = dataset::standardize(fixtures::shape_image(i % 3, probe_rng));
        probes.push_back(img.tensor().reshaped({1, 3, 256, 256}));
    }
    const auto report = modelpack::verify_package(half, model.graph, model.weights, probes);
    expect(report.ok(), "f16 package failed verification");
    expect(ratio <= 0.55, "f16 size ratio " + std::to_string(ratio));
    expect(report.max_abs_deviation < 1e-2, "f16 deviation " + std::to_string(report.max_abs_deviation));

    // Fuzz on a small graph so each decode is cheap.
    nnrt::ModelGraph g;
    g.name = "toy";
    g.input_shape = {3, 8, 8};
    nnrt::LayerSpec conv{"conv", nnrt::LayerKind::conv2d, {"input"}};
    conv.filters = 4;
    conv.kernel = 3;
    conv.padding = nnrt::Padding::same;
    nnrt::LayerSpec bn{"bn", nnrt::LayerKind::batchnorm, {"conv"}};
    nnrt::LayerSpec dense{"fc", nnrt::LayerKind::dense, {"gap"}};
    dense.units = 3;
    dense.trainable = true;
    g.layers = {conv, bn, {"gap", nnrt::LayerKind::global_avg_pool, {"bn"}}, dense, {"prob", nnrt::LayerKind::softmax, {"fc"}}};
    g.head_boundary = "gap";
    const auto toy = nnrt::random_weights(g, 9);
    std::vector<std::vector<std::uint8_t>> seeds{
        modelpack::serialize(g, toy, labels, modelpack::QuantMode::none),
        modelpack::serialize(g, toy, labels, modelpack::QuantMode::f16),
        modelpack::serialize(g, toy, labels, modelpack::QuantMode::i8_per_tensor_affine)};

    Rng fz(2026, 0);
    std::size_t accepted = 0, rejected = 0;
    std::vector<std::uint8_t> buf;
    for (int i = 0; i < 100000; ++i) {
        const auto& good = seeds[fz.below(seeds.size())];
        switch (i % 4) {
            case 0:
                buf.resize(fz.below(256));
                for (auto& b : buf) b = static_cast<std::uint8_t>(fz.below(256));
                if (fz.bernoulli(0.5) && buf.size() >= 8) std::memcpy(buf.data(), good.data(), 8);
                break;
            case 1:
                buf.assign(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(fz.below(good.size())));
                break;
            case 2: {
                buf = good;
                const auto flips = 1 + fz.below(8);
                for (std::size_t k = 0; k < flips; ++k) buf[fz.below(buf.size())] ^= static_cast<std::uint8_t>(1 + fz.below(255));
                break;
            }
            default:
                buf = good;
                if (fz.bernoulli(0.5)) {
                    buf[8 + fz.below(8)] = static_cast<std::uint8_t>(fz.below(256));
                } else {
                    buf[16 + fz.below(64)] = static_cast<std::uint8_t>(fz.below(256));
                }
        }
        try {
            modelpack::deserialize(buf);
            ++accepted;
        } catch (const modelpack::PackageError&) {
            ++rejected;
        } catch (const std::exception& e) {
            throw Failure{"untyped error on fuzz input " + std::to_string(i) + ": " + e.what()};
        }
    }
    std::ostringstream s;
    s << "10 probes bit-identical; f16 " << ratio * 100 << "% of f32, deviation " << report.max_abs_deviation
      << "; 100000 fuzzed inputs (" << rejected << " rejected, " << accepted << " decoded)";
    return s.str();
}

// ---------------------------------------------------------------- end to end

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run herb_cli(const fs::path& scratch, const std::vector<std::string>& args) {
    static int counter = 0;
    const auto out = scratch / ("stdout_" + std::to_string(counter));
    const auto err = scratch / ("stderr_" + std::to_string(counter++));
    std::vector<std::string> argv{HERB_CLI_PATH};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<char*> cargv;
    for (auto& a : argv) cargv.push_back(a.data());
    cargv.push_back(nullptr);
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, 1, out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&fa, 2, err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, cargv[0], &fa, nullptr, cargv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    if (rc != 0) throw Failure{"cannot start " + argv[0]};
    int status = 0;
    waitpid(pid, &status, 0);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

Run step(const fs::path& scratch, const std::vector<std::string>& args) {
    auto r = herb_cli(scratch, args);
    expect(r.code == 0, "herb " + args.front() + " exited " + std::to_string(r.code) + ": " + r.err);
    return r;
}

int free_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

// `herb serve` in a child process, stopped with SIGTERM.
class ServeProcess {
public:
    ServeProcess(const fs::path& model, const fs::path& info, int port, const fs::path& log) {
        std::vector<std::string> argv{HERB_CLI_PATH, "serve", "--model", model.string(), "--herb-info", info.string(),
                                      "--bind", "127.0.0.1:" + std::to_string(port)};
        std::vector<char*> cargv;
        for (auto& a : argv) cargv.push_back(a.data());
        cargv.push_back(nullptr);
        posix_spawn_file_actions_t fa;
        posix_spawn_file_actions_init(&fa);
        posix_spawn_file_actions_addopen(&fa, 2, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        const int rc = posix_spawn(&pid_, cargv[0], &fa, nullptr, cargv.data(), environ);
        posix_spawn_file_actions_destroy(&fa);
        if (rc != 0) throw Failure{"cannot start herb serve"};
    }
    ~ServeProcess() {
        ::kill(pid_, SIGTERM);
        int status = 0;
        waitpid(pid_, &status, 0);
    }

private:
    pid_t pid_ = 0;
};

std::string end_to_end() {
    fixtures::TempDir tmp;
    const fs::path d = tmp.path();
    const std::vector<std::string> classes{"Azadirachta indica", "Mentha spicata", "Ocimum tenuiflorum"};
    fixtures::write_shape_corpus(d / "corpus", classes, 30, 2024);
    const auto manifest = (d / "manifest.jsonl").string();
    const auto features = (d / "features.hftc").string();
    const auto head = (d / "head.json").string();
    const auto pkg = (d / "model.herbpkg").string();
    const auto report = (d / "report.json").string();
    const auto info = d / "herbs.json";
    dataset::save_herb_info(info, dataset::HerbInfoStore({{"Mentha spicata", {"Spearmint", "Pudina"}, "Aromatic perennial",
                                                            "Digestion", {"Europe", "South Asia"}}}));

    step(d, {"ingest", "--root", (d / "corpus").string(), "--out", manifest});
    const auto split = json::parse(step(d, {"split", "--manifest", manifest, "--seed", "3"}).out);
    expect(split == json({{"train", 66}, {"validation", 12}, {"test", 12}}), "split " + split.dump());
    step(d, {"extract-features", "--manifest", manifest, "--out", features, "--tiny-seed", "7"});
    step(d, {"train-head", "--features", features, "--out", head});
    step(d, {"export", "--head", head, "--out", pkg, "--tiny-seed", "7", "--name", "shapes", "--herb-info",
             info.string()});
    step(d, {"eval", "--model", pkg, "--manifest", manifest, "--split", "test", "--out", report});

    const auto doc = json::parse(slurp(report));
    const auto errors = fixtures::eval_report_schema_errors(doc);
    expect(errors.empty(), "report schema: " + (errors.empty() ? std::string() : errors.front()));
    const double acc = doc["accuracy"].get<double>();
    expect(acc > 0.34, "test accuracy " + std::to_string(acc));

    const int port = free_port();
    ServeProcess server(pkg, info, port, d / "serve.log");
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(1);
    bool up = false;
    for (int i = 0; i < 300 && !up; ++i) {
        auto res = client.Get("/v1/health");
        up = res && res->status == 200;
        if (!up) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    expect(up, "server never became healthy: " + slurp(d / "serve.log"));

    const auto m = dataset::read_manifest(manifest);
    std::size_t compared = 0;
    for (const auto* r : m.records_in(dataset::Split::test)) {
        if (compared == 6) break;
        auto cli = json::parse(step(d, {"predict", "--model", pkg, "--herb-info", info.string(), "--image",
                                        r->source_path.string()})
                                   .out);
        auto res = client.Post("/v1/predict", slurp(r->source_path), "application/octet-stream");
        expect(res && res->status == 200, "HTTP predict failed");
        auto http = json::parse(res->body);
        cli.erase("latency_ms");
        http.erase("latency_ms");
        expect(cli == http, "CLI and HTTP disagree on " + r->id);
        ++compared;
    }
    std::ostringstream s;
    s << "test accuracy " << acc << ", auc_macro " << doc["auc_macro"].get<double>() << ", " << compared
      << " CLI/HTTP predictions identical";
    return s.str();
}

// ---------------------------------------------------------------- confusion

std::string confusion_identities() {
    Rng rng(8, 8);
    for (int set = 0; set < 100; ++set) {
        const std::size_t c = 2 + rng.below(59), n = 1 + rng.below(2000);
        std::vector<std::size_t> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.below(c);
            pred[i] = rng.bernoulli(0.6) ? truth[i] : rng.below(c);
        }
        const auto cm = eval::confusion_matrix(truth, pred, c);
        std::vector<std::uint64_t> tcount(c, 0), pcount(c, 0);
        std::uint64_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ++tcount[truth[i]];
            ++pcount[pred[i]];
            hits += truth[i] == pred[i];
        }
        expect(cm.total() == n, "total mismatch");
        expect(cm.trace() == hits, "trace mismatch");
        expect(eval::accuracy(cm) == static_cast<double>(cm.trace()) / static_cast<double>(cm.total()),
               "accuracy is not trace/total");
        expect(eval::accuracy(cm) == static_cast<double>(hits) / static_cast<double>(n), "accuracy mismatch");
        for (std::size_t k = 0; k < c; ++k) {
            expect(cm.row_sum(k) == tcount[k], "row sum differs from label count");
            expect(cm.col_sum(k) == pcount[k], "column sum differs from prediction count");
        }
    }
    return "100 sets, trace/total and marginals exact";
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"split_fidelity", 5, split_fidelity},
        {"gradient_correctness", 10, gradient_correctness},
        {"trainability", 10, trainability},
        {"auc_oracle_equivalence", 10, auc_oracle},
        {"softmax_loss_invariants", 10, softmax_invariants},
        {"augmentation_suite", 30, augmentation_suite},
        {"package_integrity", 60, package_integrity},
        {"end_to_end_smoke", 120, end_to_end},
        {"confusion_identities", 5, confusion_identities},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.body();
        } catch (const Failure& f) {
            ok = false;
            detail = f.what;
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok && secs >= c.limit_s) {
            ok = false;
            detail += " (too slow)";
        }
        failed += !ok;
        std::printf("%s %-24s %7.2f s / %3.0f s  %s\n", ok ? "PASS" : "FAIL", c.name.c_str(), secs, c.limit_s,
                    detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
