#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "aes/checkpoint.hpp"
#include "aes/error.hpp"
#include "aes/model.hpp"

using namespace aes;
using namespace aes::model;

namespace {

EncoderConfig small(int layers = 2, int d = 8) {
    EncoderConfig c = EncoderConfig::tiny();
    c.num_layers = layers;
    c.hidden_dim = d;
    c.num_heads = 2;
    c.ffn_dim = 12;
    c.frame_size = 32;
    c.frame_stride = 16;
    c.max_frames = 32;
    c.head_blocks = 1;
    return c;
}

// Every coordinate (biases and gains included) drawn at random so no stage
// is trivially zero.
ModelParams random_params(const EncoderConfig& c, unsigned seed) {
    ModelParams p = ModelParams::initialize(c, seed);
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (double& v : p.weights.flat()) v += u(g);
    for (double& v : p.weights.span(p.weights.layout().layer_weights)) v = 0.5 + std::abs(u(g));
    return p;
}

std::vector<float> noise(std::size_t n, unsigned seed) {
    std::mt19937 g(seed);
    std::uniform_real_distribution<float> u(-0.8f, 0.8f);
    std::vector<float> w(n);
    for (float& v : w) v = u(g);
    return w;
}

HiddenStack random_stack(std::size_t L, std::size_t T, std::size_t d, std::mt19937_64& g) {
    std::normal_distribution<double> n;
    HiddenStack s;
    for (std::size_t l = 0; l < L; ++l) {
        Matrix m(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(g);
        s.layers.push_back(m);
    }
    return s;
}

}  // namespace

TEST(Frontend, FrameCount) {
    EncoderConfig c;
    EXPECT_EQ(c.frame_count(400), 1u);
    EXPECT_EQ(c.frame_count(1040), 3u);
    EXPECT_EQ(c.frame_count(10), 1u);
    // Enumeration oracle: count start offsets whose frame fits.
    for (std::size_t n = 400; n < 3000; n += 37) {
        std::size_t count = 0;
        for (std::size_t s = 0; s + 400 <= n; s += 320) ++count;
        EXPECT_EQ(c.frame_count(n), count) << n;
    }
}

TEST(Frontend, ZeroWaveformGivesNormalizedBias) {
    const EncoderConfig c = small();
    const ModelParams p = random_params(c, 1);
    const std::vector<float> zeros(100, 0.0f);
    const Matrix f = frontend_frames(zeros, p);
    const auto& L = p.weights.layout();
    const ConstRowVectorMap bias = p.weights.row(L.frontend.bias);
    const double mean = bias.mean();
    const double var = (bias.array() - mean).square().mean();
    for (Eigen::Index t = 0; t < f.rows(); ++t)
        for (Eigen::Index i = 0; i < f.cols(); ++i) {
            const double expect = (bias(i) - mean) / std::sqrt(var + kLayerNormEpsilon) *
                                      p.weights.row(L.frontend.ln_gain)(i) +
                                  p.weights.row(L.frontend.ln_bias)(i);
            EXPECT_NEAR(f(t, i), expect, 1e-12);
        }
}

TEST(Transformer, ShapeAndDeterminism) {
    EncoderConfig c = small(2, 8);
    const ModelParams p = random_params(c, 2);
    Matrix x = Matrix::Random(5, 8);
    const HiddenStack a = transformer_forward(x, p);
    const HiddenStack b = transformer_forward(x, p);
    ASSERT_EQ(a.num_layers(), 2u);
    EXPECT_EQ(a.frames(), 5u);
    EXPECT_EQ(a.dim(), 8u);
    for (std::size_t l = 0; l < 2; ++l) EXPECT_TRUE(a.layers[l] == b.layers[l]);
}

TEST(Transformer, PermutationEquivariantWithoutPositions) {
    EncoderConfig c = small(3, 8);
    c.positional_encoding = false;
    const ModelParams p = random_params(c, 3);
    std::mt19937_64 g(9);
    Matrix x = Matrix::Random(7, 8);
    std::vector<Eigen::Index> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    Matrix xp(7, 8);
    for (Eigen::Index t = 0; t < 7; ++t) xp.row(t) = x.row(perm[static_cast<std::size_t>(t)]);
    const HiddenStack a = transformer_forward(x, p);
    const HiddenStack b = transformer_forward(xp, p);
    for (std::size_t l = 0; l < 3; ++l)
        for (Eigen::Index t = 0; t < 7; ++t)
            EXPECT_LT((b.layers[l].row(t) - a.layers[l].row(perm[static_cast<std::size_t>(t)])).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transformer, PositionalEncodingBreaksEquivariance) {
    EncoderConfig c = small(1, 8);
    const ModelParams p = random_params(c, 3);
    Matrix x = Matrix::Random(4, 8);
    Matrix xp = x;
    xp.row(0).swap(xp.row(3));
    const HiddenStack a = transformer_forward(x, p);
    const HiddenStack b = transformer_forward(xp, p);
    EXPECT_GT((b.layers[0].row(0) - a.layers[0].row(3)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Transformer, RejectsTooManyFrames) {
    EncoderConfig c = small();
    const ModelParams p = random_params(c, 1);
    try {
        transformer_forward(Matrix::Zero(c.max_frames + 1, c.hidden_dim), p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Usage);
    }
}

TEST(Pooling, WeightNormalize) {
    const std::vector<double> a{1, 1, 1};
    for (double z : layer_weight_normalize(a)) EXPECT_DOUBLE_EQ(z, 1.0 / 3.0);
    const std::vector<double> b{1, 2, 1};
    EXPECT_EQ(layer_weight_normalize(b), (std::vector<double>{0.25, 0.5, 0.25}));
    const std::vector<double> c{1, -1};
    try {
        layer_weight_normalize(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numerical);
    }
}

TEST(Pooling, WeightSumProperty) {
    std::mt19937_64 g(17);
    std::uniform_real_distribution<double> u(0.01, 3);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> w(1 + trial % 12);
        for (double& v : w) v = u(g);
        const auto z = layer_weight_normalize(w);
        EXPECT_NEAR(std::accumulate(z.begin(), z.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(Pooling, AggregateForcedArithmetic) {
    HiddenStack s;
    s.layers.push_back((Matrix(1, 2) << 1, 0).finished());
    s.layers.push_back((Matrix(1, 2) << 0, 1).finished());
    const std::vector<double> z{0.5, 0.5};
    const RowVector e = aggregate_embedding(s, z);
    EXPECT_EQ(e(0), 0.5);
    EXPECT_EQ(e(1), 0.5);
}

TEST(Pooling, AggregateOfConstantStackIsTheConstant) {
    HiddenStack s;
    RowVector c(3);
    c << 0.3, -1.2, 4.0;
    for (int l = 0; l < 4; ++l) s.layers.push_back(c.replicate(5, 1));
    const std::vector<double> z{0.1, 0.2, 0.3, 0.4};
    EXPECT_LT((aggregate_embedding(s, z) - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pooling, AggregateMatchesBruteForce) {
    std::mt19937_64 g(23);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    const HiddenStack s = random_stack(3, 4, 5, g);
    std::vector<double> w{u(g), u(g), u(g)};
    const auto z = layer_weight_normalize(w);
    const RowVector e = aggregate_embedding(s, z);
    for (std::size_t k = 0; k < 5; ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t < 4; ++t)
            for (std::size_t l = 0; l < 3; ++l) acc += z[l] * s.layers[l](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
        EXPECT_NEAR(e(static_cast<Eigen::Index>(k)), acc / 4.0, 1e-12);
    }
}

TEST(Pooling, L2Normalize) {
    RowVector v(2);
    v << 3, 4;
    const RowVector e = l2_normalize(v);
    EXPECT_DOUBLE_EQ(e(0), 0.6);
    EXPECT_DOUBLE_EQ(e(1), 0.8);
    EXPECT_LT((l2_normalize(e) - e).cwiseAbs().maxCoeff(), 1e-12);
    try {
        l2_normalize(RowVector::Zero(2));
        FAIL();
    } catch (const Error& e2) {
        EXPECT_EQ(e2.kind(), ErrorKind::Numerical);
    }
}

TEST(Head, ZeroDepthZeroWeightsGivesBias) {
    EncoderConfig c = small();
    c.head_blocks = 0;
    ModelParams p = random_params(c, 4);
    const auto& L = p.weights.layout();
    for (double& v : p.weights.span(L.out_weight)) v = 0.0;
    const RowVector e = RowVector::Random(c.hidden_dim);
    const RawScores r = mlp_forward(e, p);
    for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(r[a], p.weights.span(L.out_bias)[a]);
}

TEST(Head, OneBlockMatchesStraightLine) {
    EncoderConfig c = small(2, 8);
    c.head_blocks = 1;
    const ModelParams p = random_params(c, 5);
    const auto& L = p.weights.layout();
    std::vector<double> e(8);
    std::mt19937_64 g(1);
    std::normal_distribution<double> n;
    for (double& v : e) v = n(g);
    RowVector ev(8);
    for (int i = 0; i < 8; ++i) ev(i) = e[static_cast<std::size_t>(i)];

    const auto W = p.weights.span(L.head_blocks[0].weight);  // 8 x 8, row-major
    const auto b = p.weights.span(L.head_blocks[0].bias);
    const auto gain = p.weights.span(L.head_blocks[0].ln_gain);
    const auto beta = p.weights.span(L.head_blocks[0].ln_bias);
    std::vector<double> pre(8, 0.0);
    for (std::size_t j = 0; j < 8; ++j) {
        pre[j] = b[j];
        for (std::size_t i = 0; i < 8; ++i) pre[j] += e[i] * W[i * 8 + j];
    }
    double mean = 0, var = 0;
    for (double v : pre) mean += v / 8.0;
    for (double v : pre) var += (v - mean) * (v - mean) / 8.0;
    std::vector<double> act(8);
    for (std::size_t j = 0; j < 8; ++j) {
        const double x = (pre[j] - mean) / std::sqrt(var + 1e-5) * gain[j] + beta[j];
        act[j] = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    }
    const auto Wo = p.weights.span(L.out_weight);  // 8 x 4
    const auto bo = p.weights.span(L.out_bias);
    const RawScores r = mlp_forward(ev, p);
    for (std::size_t a = 0; a < 4; ++a) {
        double y = bo[a];
        for (std::size_t j = 0; j < 8; ++j) y += act[j] * Wo[j * 4 + a];
        EXPECT_NEAR(r[a], y, 1e-12);
    }
}

TEST(Predict, DenormalizationOfZeroHead) {
    EncoderConfig c = small();
    ModelParams p = random_params(c, 6);
    const auto& L = p.weights.layout();
    for (double& v : p.weights.span(L.out_weight)) v = 0.0;
    for (double& v : p.weights.span(L.out_bias)) v = 0.0;
    p.normalizer.mean = {5, 5, 5, 5};
    const AesScores s = predict(noise(300, 1), p);
    EXPECT_EQ(s, (AesScores{5, 5, 5, 5}));

    const RawScores one{1, 1, 1, 1};
    Normalizer n;
    n.mean = {4, 4, 4, 4};
    n.stddev = {2, 2, 2, 2};
    EXPECT_EQ(denormalize_scores(one, n).pq, 6.0);
    Normalizer m;
    m.mean = {6, 3, 7, 5};
    EXPECT_EQ(denormalize_scores(RawScores{}, m), (AesScores{6, 3, 7, 5}));
}

TEST(Predict, EqualsComposedStages) {
    EncoderConfig c = small(3, 8);
    c.head_blocks = 2;
    ModelParams p = random_params(c, 7);
    p.normalizer.mean = {5, 4, 6, 5};
    p.normalizer.stddev = {1.5, 2, 0.5, 1};
    const auto wave = noise(250, 3);
    const Matrix f = frontend_frames(wave, p);
    const HiddenStack s = transformer_forward(f, p);
    const auto z = layer_weight_normalize(p.weights.span(p.weights.layout().layer_weights));
    const RowVector e = l2_normalize(aggregate_embedding(s, z));
    const AesScores composed = denormalize_scores(mlp_forward(e, p), p.normalizer);
    const AesScores direct = predict(wave, p);
    const AesScores again = predict(wave, p);
    for (Axis a : kAllAxes) {
        EXPECT_NEAR(direct[a], composed[a], 1e-12);
        EXPECT_EQ(direct[a], again[a]);
    }
}

TEST(Predict, EmbeddingIsUnitNormProperty) {
    std::mt19937 g(31);
    for (int trial = 0; trial < 100; ++trial) {
        EncoderConfig c = small(1 + trial % 3, 8);
        const ModelParams p = random_params(c, static_cast<unsigned>(trial));
        const auto wave = noise(32 + g() % 400, static_cast<unsigned>(g()));
        const auto z = layer_weight_normalize(p.weights.span(p.weights.layout().layer_weights));
        const RowVector e = l2_normalize(aggregate_embedding(transformer_forward(frontend_frames(wave, p), p), z));
        EXPECT_NEAR(e.norm(), 1.0, 1e-12);
    }
}

TEST(Normalizer, PopulationMoments) {
    std::vector<AesScores> labels{{2, 1, 1, 1}, {4, 2, 2, 2}, {6, 3, 3, 4}};
    const NormalizedTargets t = normalize_targets(labels);
    EXPECT_DOUBLE_EQ(t.stats.mean[0], 4.0);
    EXPECT_NEAR(t.stats.stddev[0], std::sqrt(8.0 / 3.0), 1e-12);
    EXPECT_NEAR(t.targets[0][0], -1.224744871391589, 1e-12);
    EXPECT_NEAR(t.targets[1][0], 0.0, 1e-12);
    EXPECT_NEAR(t.targets[2][0], 1.224744871391589, 1e-12);
}

TEST(Normalizer, StandardizedIsFixedPoint) {
    std::vector<AesScores> labels{{-1, -1, -1, -1}, {1, 1, 1, 1}, {-1, -1, -1, -1}, {1, 1, 1, 1}};
    const NormalizedTargets t = normalize_targets(labels);
    for (std::size_t a = 0; a < 4; ++a) {
        EXPECT_NEAR(t.stats.mean[a], 0.0, 1e-15);
        EXPECT_NEAR(t.stats.stddev[a], 1.0, 1e-15);
    }
}

TEST(Normalizer, ConstantAxisIsError) {
    std::vector<AesScores> labels{{5, 1, 1, 1}, {5, 2, 2, 2}, {5, 3, 3, 3}};
    try {
        normalize_targets(labels);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Data);
        EXPECT_NE(std::string(e.what()).find("PQ"), std::string::npos);
    }
}

TEST(Normalizer, RoundTripProperty) {
    std::mt19937_64 g(41);
    std::uniform_real_distribution<double> u(1, 10);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<AesScores> labels(2 + trial % 30);
        for (auto& l : labels) l = {u(g), u(g), u(g), u(g)};
        const NormalizedTargets t = normalize_targets(labels);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const AesScores back = denormalize_scores(t.targets[i], t.stats);
            for (Axis a : kAllAxes) EXPECT_NEAR(back[a], labels[i][a], 1e-9);
        }
    }
}

TEST(Checkpoint, RoundTripIsExact) {
    EncoderConfig c = small();
    ModelParams p = random_params(c, 8);
    p.normalizer.mean = {5.5, 3.25, 6, 7};
    p.normalizer.stddev = {1.1, 2.2, 0.3, 1.7};
    AdamState opt = AdamState::zeros_like(p.weights);
    opt.step = 42;
    for (double& v : opt.m.flat()) v = 0.125;
    const std::string bytes = serialize_checkpoint(p, &opt);
    const Checkpoint back = deserialize_checkpoint(bytes);
    EXPECT_TRUE(back.params.config == c);
    EXPECT_TRUE(back.params.normalizer == p.normalizer);
    EXPECT_TRUE(std::equal(back.params.weights.flat().begin(), back.params.weights.flat().end(), p.weights.flat().begin()));
    ASSERT_TRUE(back.optimizer);
    EXPECT_EQ(back.optimizer->step, 42);
    EXPECT_EQ(back.optimizer->m.flat()[3], 0.125);
    EXPECT_EQ(serialize_checkpoint(back.params, &*back.optimizer), bytes);
}

TEST(Checkpoint, CorruptionDetected) {
    const ModelParams p = random_params(small(), 9);
    std::string bytes = serialize_checkpoint(p);
    EXPECT_EQ(bytes.substr(0, 8), "AESMODEL");
    std::string flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x10;
    EXPECT_THROW(deserialize_checkpoint(flipped), Error);
    EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 9)), Error);
    std::string magic = bytes;
    magic[0] = 'X';
    try {
        deserialize_checkpoint(magic);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Format);
    }
}

TEST(Layout, CoordinateNames) {
    const ParamLayout L(small());
    EXPECT_EQ(L.coordinate_name(0), "frontend.weight[0,0]");
    EXPECT_EQ(L.slots().back().offset + L.slots().back().size(), L.total_size());
}
