#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "herb/nnrt/activations.hpp"
#include "herb/nnrt/forward.hpp"
#include "herb/nnrt/kernels.hpp"
#include "herb/nnrt/tiny_densenet.hpp"

using namespace herb;
using namespace herb::nnrt;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

Tensor vec(std::vector<float> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor({n}, std::move(v));
}

ModelGraph small_tiny(std::int64_t classes, std::int64_t size) {
    auto g = tiny_densenet_graph(classes);
    g.input_shape = {3, size, size};
    return g;
}

}  // namespace

TEST(Conv, ScalarKernelDoubles) {
    const auto out = conv2d_forward(Tensor({1, 3, 3, 3}, 1.0f), Tensor({1, 3, 1, 1}, std::vector<float>{2, 0, 0}), 1, Padding::valid);
    EXPECT_EQ(out.shape(), (Tensor::Shape{1, 1, 3, 3}));
    for (float v : out.values()) EXPECT_EQ(v, 2.0f);
}

TEST(Conv, IdentityKernelSamePadding) {
    Rng rng(1, 1);
    const auto x = fixtures::random_tensor({2, 3, 7, 5}, rng, -1, 1);
    Tensor k({3, 3, 3, 3});
    for (int c = 0; c < 3; ++c) k.at(c, c, 1, 1) = 1.0f;
    EXPECT_EQ(conv2d_forward(x, k, 1, Padding::same), x);
}

TEST(Conv, HandDotProduct) {
    const auto out = conv2d_forward(Tensor({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4}), Tensor({1, 1, 2, 2}, 1.0f), 1, Padding::valid);
    EXPECT_EQ(out.shape(), (Tensor::Shape{1, 1, 1, 1}));
    EXPECT_EQ(out[0], 10.0f);
}

TEST(Conv, MatchesNaiveLoopWithStrideAndBias) {
    Rng rng(2, 2);
    const auto x = fixtures::random_tensor({2, 5, 9, 8}, rng, -1, 1);
    const auto k = fixtures::random_tensor({11, 5, 3, 3}, rng, -1, 1);
    const auto b = fixtures::random_tensor({11}, rng, -1, 1);
    for (auto pad : {Padding::valid, Padding::same}) {
        for (std::int64_t stride : {1, 2}) {
            const auto out = conv2d_forward(x, k, stride, pad, b);
            const auto g = conv_geometry(9, 8, 3, stride, pad);
            ASSERT_EQ(out.shape(), (Tensor::Shape{2, 11, g.out_h, g.out_w}));
            for (int n = 0; n < 2; ++n)
                for (int o = 0; o < 11; ++o)
                    for (int y = 0; y < g.out_h; ++y)
                        for (int xx = 0; xx < g.out_w; ++xx) {
                            double s = b[o];
                            for (int i = 0; i < 5; ++i)
                                for (int ky = 0; ky < 3; ++ky)
                                    for (int kx = 0; kx < 3; ++kx) {
                                        const auto sy = y * stride + ky - g.pad_top;
                                        const auto sx = xx * stride + kx - g.pad_left;
                                        if (sy < 0 || sx < 0 || sy >= 9 || sx >= 8) continue;
                                        s += double(x.at(n, i, sy, sx)) * k.at(o, i, ky, kx);
                                    }
                            ASSERT_NEAR(out.at(n, o, y, xx), s, 1e-5);
                        }
        }
    }
}

TEST(Conv, GeometryFormulas) {
    auto g = conv_geometry(256, 256, 3, 1, Padding::same);
    EXPECT_EQ(g.out_h, 256);
    EXPECT_EQ(g.pad_top, 1);
    g = conv_geometry(7, 7, 3, 2, Padding::valid);
    EXPECT_EQ(g.out_h, 3);
    g = conv_geometry(7, 7, 2, 2, Padding::same);
    EXPECT_EQ(g.out_h, 4);
    EXPECT_EQ(g.pad_top, 0);
}

TEST(Conv, MismatchNamesBothShapes) {
    const auto msg = error_of([] { conv2d_forward(Tensor({1, 3, 4, 4}), Tensor({2, 5, 3, 3}), 1, Padding::valid); });
    EXPECT_NE(msg.find("[1x3x4x4]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2x5x3x3]"), std::string::npos) << msg;
}

TEST(BatchNorm, ClosedForms) {
    const auto one = [](float v) { return Tensor({1}, v); };
    const auto y = batchnorm_forward(Tensor({1, 1, 1, 1}, 2.0f), one(3), one(1), one(1), one(4));
    EXPECT_NEAR(y[0], 2.4999981, 1e-6);

    Rng rng(3, 3);
    const auto x = fixtures::random_tensor({2, 3, 4, 4}, rng, -5, 5);
    const auto near_id = batchnorm_forward(x, Tensor({3}, 1.0f), Tensor({3}), Tensor({3}), Tensor({3}, 1.0f));
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(near_id[i], x[i] / std::sqrt(1.0 + 1e-5), 1e-6);

    const auto collapsed = batchnorm_forward(x, Tensor({3}), vec({0.5f, -1.0f, 2.0f}), Tensor({3}), Tensor({3}, 1.0f));
    for (int c = 0; c < 3; ++c) EXPECT_EQ(collapsed.at(1, c, 2, 3), std::vector<float>({0.5f, -1.0f, 2.0f})[c]);

    EXPECT_THROW(batchnorm_forward(x, Tensor({3}, 1.0f), Tensor({3}), Tensor({3}), vec({1, -1, 1})), std::invalid_argument);
}

TEST(Pool, AverageAndMax) {
    const Tensor x({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
    EXPECT_EQ(pool_forward(x, PoolKind::avg, 2, 2)[0], 2.5f);
    EXPECT_EQ(pool_forward(x, PoolKind::max, 2, 2)[0], 4.0f);
    const Tensor c({1, 2, 6, 6}, 0.3f);
    for (auto kind : {PoolKind::avg, PoolKind::max}) {
        const auto out = pool_forward(c, kind, 2, 2);
        EXPECT_EQ(out.shape(), (Tensor::Shape{1, 2, 3, 3}));
        for (float v : out.values()) EXPECT_NEAR(v, 0.3f, 1e-7);
    }
    EXPECT_THROW(pool_forward(x, PoolKind::max, 3, 1), std::invalid_argument);
}

TEST(Concat, LayoutAndErrors) {
    Rng rng(4, 4);
    const auto a = fixtures::random_tensor({2, 16, 3, 3}, rng);
    const auto b = fixtures::random_tensor({2, 8, 3, 3}, rng);
    EXPECT_EQ(concat_channels(std::vector<Tensor>{a}), a);
    const auto out = concat_channels(std::vector<Tensor>{a, b});
    EXPECT_EQ(out.shape(), (Tensor::Shape{2, 24, 3, 3}));
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 24; ++c)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 3; ++x)
                    ASSERT_EQ(out.at(n, c, y, x), c < 16 ? a.at(n, c, y, x) : b.at(n, c - 16, y, x));
    EXPECT_THROW(concat_channels(std::vector<Tensor>{a, Tensor({2, 8, 4, 3})}), std::invalid_argument);
}

TEST(Concat, DenseBlockChannelArithmetic) {
    ModelGraph g;
    g.name = "block";
    g.input_shape = {16, 8, 8};
    const auto out = add_dense_block(g, std::string(kGraphInput), "b", 4, 8);
    g.layers.push_back({"gap", LayerKind::global_avg_pool, {out}});
    LayerSpec dense{"fc", LayerKind::dense, {"gap"}};
    dense.units = 2;
    g.layers.push_back(dense);
    g.layers.push_back({"prob", LayerKind::softmax, {"fc"}});
    g.head_boundary = "gap";
    const auto shapes = infer_shapes(g);
    EXPECT_EQ(shapes.at(out), (Tensor::Shape{48, 8, 8}));
    EXPECT_EQ(shapes.at("gap"), (Tensor::Shape{48}));
}

TEST(GlobalAvgPool, MeanAndLinearity) {
    EXPECT_EQ(global_avg_pool(Tensor({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4}))[0], 2.5f);
    const auto c = global_avg_pool(Tensor({2, 3, 5, 5}, 0.7f));
    EXPECT_EQ(c.shape(), (Tensor::Shape{2, 3}));
    for (float v : c.values()) EXPECT_NEAR(v, 0.7f, 1e-6);
    Rng rng(5, 5);
    auto x = fixtures::random_tensor({1, 4, 6, 6}, rng);
    const auto base = global_avg_pool(x);
    for (auto& v : x.storage()) v *= 3.0f;
    const auto scaled = global_avg_pool(x);
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(scaled[i], 3.0f * base[i], 1e-5);
}

TEST(Dense, MatrixProduct) {
    const Tensor x({1, 2}, std::vector<float>{1, 2});
    const Tensor w({3, 2}, std::vector<float>{1, 0, 0, 1, 1, 1});
    const auto out = dense_forward(x, w, vec({0.5f, 0, -1}));
    EXPECT_EQ(out.storage(), (std::vector<float>{1.5f, 2.0f, 2.0f}));
    EXPECT_THROW(dense_forward(Tensor({1, 3}), w, Tensor({3})), std::invalid_argument);
}

TEST(Softmax, ReferenceValuesAndInvariants) {
    const auto p = softmax(Tensor({1, 3}, std::vector<float>{1, 2, 3}));
    EXPECT_NEAR(p[0], 0.09003057, 1e-7);
    EXPECT_NEAR(p[1], 0.24472847, 1e-7);
    EXPECT_NEAR(p[2], 0.66524096, 1e-7);
    const auto u = softmax(Tensor({1, 60}));
    for (float v : u.values()) EXPECT_NEAR(v, 1.0 / 60, 1e-8);
    const auto shifted = softmax(Tensor({1, 3}, std::vector<float>{101, 102, 103}));
    EXPECT_EQ(shifted, p);
    const auto big = softmax(Tensor({1, 2}, std::vector<float>{1e30f, -1e30f}));
    EXPECT_EQ(big[0], 1.0f);
    EXPECT_EQ(big[1], 0.0f);
}

TEST(Dropout, InvertedScalingAndRate) {
    Rng rng(6, 6);
    const auto out = dropout_forward(Tensor({1, 10000}, 1.0f), 0.2, rng);
    int kept = 0;
    for (float v : out.values()) {
        if (v != 0.0f) {
            ++kept;
            ASSERT_NEAR(v, 1.25f, 1e-6);
        }
    }
    EXPECT_NEAR(kept / 10000.0, 0.8, 3 * std::sqrt(0.16 / 10000));
}

TEST(Forward, HandComputedToyGraph) {
    ModelGraph g;
    g.name = "toy";
    g.input_shape = {2, 3, 3};
    LayerSpec conv{"conv", LayerKind::conv2d, {"input"}};
    conv.filters = 2;
    conv.kernel = 1;
    conv.use_bias = true;
    LayerSpec dense{"fc", LayerKind::dense, {"gap"}};
    dense.units = 2;
    g.layers = {conv, {"gap", LayerKind::global_avg_pool, {"conv"}}, dense, {"prob", LayerKind::softmax, {"fc"}}};
    g.head_boundary = "gap";

    WeightStore w;
    w.set("conv", "kernel", Tensor({2, 2, 1, 1}, std::vector<float>{1, 2, -1, 0.5f}));
    w.set("conv", "bias", vec({0.1f, 0.2f}));
    w.set("fc", "weight", Tensor({2, 2}, std::vector<float>{1, 0, 0, -1}));
    w.set("fc", "bias", vec({0, 0.3f}));
    check_weights(g, w);

    Tensor x({1, 2, 3, 3});
    for (int y = 0; y < 3; ++y)
        for (int xx = 0; xx < 3; ++xx) {
            x.at(0, 0, y, xx) = 0.5f;
            x.at(0, 1, y, xx) = 0.25f;
        }
    // conv: [0.5 + 0.5 + 0.1, -0.5 + 0.125 + 0.2] = [1.1, -0.175]; gap keeps them.
    // fc: [1.1, 0.175 + 0.3] = [1.1, 0.475]
    const double z0 = 1.1, z1 = 0.475;
    const double p0 = 1.0 / (1.0 + std::exp(z1 - z0));
    const auto probs = predict_proba(g, w, x);
    EXPECT_NEAR(probs[0], p0, 1e-6);
    EXPECT_NEAR(probs[1], 1 - p0, 1e-6);
    const auto feats = extract_features(g, w, x);
    EXPECT_NEAR(feats[0], 1.1, 1e-6);
    EXPECT_NEAR(feats[1], -0.175, 1e-6);

    WeightStore missing;
    missing.set("conv", "kernel", w.get("conv", "kernel"));
    missing.set("conv", "bias", w.get("conv", "bias"));
    const auto msg = error_of([&] { predict_proba(g, missing, x); });
    EXPECT_NE(msg.find("fc"), std::string::npos) << msg;
    EXPECT_NE(error_of([&] { check_weights(g, missing); }).find("fc"), std::string::npos);
}

TEST(Graph, ValidationAndJsonRoundTrip) {
    const auto g = tiny_densenet_graph(60);
    const auto shapes = infer_shapes(g);
    EXPECT_EQ(shapes.at(g.head_boundary), (Tensor::Shape{kTinyFeatureWidth}));
    EXPECT_EQ(g.num_classes(), 60);
    EXPECT_EQ(graph_from_json(graph_to_json(g)), g);

    auto cyclic = g;
    std::swap(cyclic.layers[1], cyclic.layers[2]);
    EXPECT_THROW(validate_graph(cyclic), std::invalid_argument);
    auto no_softmax = g;
    no_softmax.layers.pop_back();
    EXPECT_THROW(validate_graph(no_softmax), std::invalid_argument);
    auto bad_stride = g;
    bad_stride.layers[0].stride = 0;
    EXPECT_THROW(validate_graph(bad_stride), std::invalid_argument);
    auto bad_rate = g;
    for (auto& l : bad_rate.layers)
        if (l.kind == LayerKind::dropout) l.rate = 1.0;
    EXPECT_THROW(validate_graph(bad_rate), std::invalid_argument);
    EXPECT_THROW(graph_from_json(nlohmann::json{{"name", "x"}}), std::invalid_argument);
}

TEST(TinyDenseNet, ZeroHeadGivesUniformAndInferIsDeterministic) {
    const auto model = make_tiny_densenet(60, 11);
    Rng rng(7, 7);
    const auto x = fixtures::random_tensor({2, 3, 256, 256}, rng);
    const auto p1 = predict_proba(model.graph, model.weights, x);
    const auto p2 = predict_proba(model.graph, model.weights, x);
    EXPECT_EQ(p1, p2);
    ASSERT_EQ(p1.shape(), (Tensor::Shape{2, 60}));
    for (float v : p1.values()) ASSERT_NEAR(v, 1.0 / 60, 1e-7);
}

TEST(TinyDenseNet, FeaturesAreFiniteAndInformative) {
    const auto model = make_tiny_densenet(3, 5);
    Rng rng(8, 8);
    Tensor batch({2, 3, 256, 256});
    const auto a = fixtures::shape_image(0, rng), b = fixtures::shape_image(1, rng);
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x)
            for (int c = 0; c < 3; ++c) {
                batch.at(0, c, y, x) = a.at(y, x, c) / 255.0f;
                batch.at(1, c, y, x) = b.at(y, x, c) / 255.0f;
            }
    const auto f = extract_features(model.graph, model.weights, batch);
    ASSERT_EQ(f.shape(), (Tensor::Shape{2, kTinyFeatureWidth}));
    EXPECT_TRUE(all_finite(f));
    double diff = 0.0, spread = 0.0;
    for (int d = 0; d < kTinyFeatureWidth; ++d) {
        diff += std::abs(f[d] - f[kTinyFeatureWidth + d]);
        spread += std::abs(f[d] - f[0]);
    }
    EXPECT_GT(diff, 1e-3);
    EXPECT_GT(spread, 1e-3);
    EXPECT_EQ(make_tiny_densenet(3, 5).weights, model.weights);
    EXPECT_NE(make_tiny_densenet(3, 6).weights, model.weights);
}

TEST(TinyDenseNet, FiniteOnWildInputs) {
    const auto g = small_tiny(5, 16);
    const auto w = random_weights(g, 3);
    Rng rng(9, 9);
    for (int trial = 0; trial < 30; ++trial) {
        const double scale = std::pow(10.0, rng.uniform(-3, 3));
        const auto x = fixtures::random_tensor({1, 3, 16, 16}, rng, -scale, scale);
        const auto p = predict_proba(g, w, x);
        ASSERT_TRUE(all_finite(p));
        double sum = 0.0;
        for (float v : p.values()) sum += v;
        ASSERT_NEAR(sum, 1.0, 1e-5);
    }
}

TEST(TinyDenseNet, TrainModeDropoutNeedsRngAndVaries) {
    auto g = small_tiny(4, 16);
    auto w = random_weights(g, 4);
    Rng rng(10, 10);
    const auto x = fixtures::random_tensor({1, 3, 16, 16}, rng);
    ForwardOptions opt;
    opt.mode = Mode::train;
    EXPECT_THROW(forward(g, w, x, opt), std::invalid_argument);
    Rng r1(1, 0), r2(1, 0);
    opt.rng = &r1;
    const auto a = forward(g, w, x, opt).output;
    opt.rng = &r2;
    EXPECT_EQ(forward(g, w, x, opt).output, a);
}

TEST(Activations, GridLayoutAndDump) {
    const auto spatial = grid_layout({48, 8, 8});
    EXPECT_EQ(spatial.tiles, 48);
    EXPECT_EQ(spatial.columns, 7);
    EXPECT_EQ(spatial.rows, 7);
    EXPECT_EQ(spatial.image_width(), 7 * 8 + 8);
    const auto vector = grid_layout({10});
    EXPECT_EQ(vector.tiles, 10);
    EXPECT_EQ(vector.columns, 4);
    EXPECT_EQ(vector.rows, 3);
    EXPECT_EQ(vector.tile_width, GridLayout::kVectorTile);

    const auto constant = render_activation_grid(Tensor({1, 2, 4, 4}, 3.0f));
    EXPECT_EQ(constant.at(1, 1, 0), 128);

    const auto g = small_tiny(3, 16);
    const auto w = random_weights(g, 1);
    fixtures::TempDir dir;
    Rng rng(11, 11);
    const auto paths = dump_activations(g, w, fixtures::random_tensor({1, 3, 16, 16}, rng), dir.path());
    ASSERT_EQ(paths.size(), g.layers.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        ASSERT_TRUE(std::filesystem::exists(paths[i]));
        EXPECT_EQ(paths[i].filename(), g.layers[i].name + ".png");
    }
    const auto shapes = infer_shapes(g);
    const auto first = read_image(paths[0]);
    const auto layout = grid_layout(shapes.at(g.layers[0].name));
    EXPECT_EQ(first.width, layout.image_width());
    EXPECT_EQ(first.height, layout.image_height());
}
