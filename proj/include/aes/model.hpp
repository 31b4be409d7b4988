#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aes/scores.hpp"

namespace aes::model {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using RowVectorMap = Eigen::Map<RowVector>;
using ConstRowVectorMap = Eigen::Map<const RowVector>;

/// Head outputs in normalized-target space, axis order PQ, PC, CE, CU.
using RawScores = std::array<double, kNumAxes>;

inline constexpr double kDegenerateEpsilon = 1e-8;
inline constexpr double kLayerNormEpsilon = 1e-5;

struct EncoderConfig {
    int num_layers = 4;
    int hidden_dim = 64;
    int num_heads = 4;
    int ffn_dim = 128;
    int frame_size = 400;
    int frame_stride = 320;
    int max_frames = 512;
    /// Linear -> layer-norm -> GeLU blocks before the final 4-way projection.
    int head_blocks = 2;
    /// Fixed sinusoidal encodings added to the frontend output.
    bool positional_encoding = true;

    /// Throws Error(Usage) on an inconsistent configuration.
    void validate() const;

    /// Frames produced for a waveform of `num_samples` (at least 1).
    std::size_t frame_count(std::size_t num_samples) const;

    static EncoderConfig desk() { return {}; }
    /// 12 layers x 768 hidden, 12 heads, 3072 FFN.
    static EncoderConfig base();
    /// Gradient-check sized model (L=2, d=16).
    static EncoderConfig tiny();

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct ParamSlot {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const noexcept { return rows * cols; }
};

/// Declared order of every learnable array. Checkpoints and gradient sets
/// follow this order exactly.
class ParamLayout {
public:
    explicit ParamLayout(const EncoderConfig& config);

    const EncoderConfig& config() const noexcept { return config_; }
    const std::vector<ParamSlot>& slots() const noexcept { return slots_; }
    std::size_t total_size() const noexcept { return total_; }

    /// Human-readable coordinate, e.g. "layer1.attn.wq[3,5]".
    std::string coordinate_name(std::size_t flat_index) const;

    struct Frontend {
        std::size_t weight, bias, ln_gain, ln_bias;
    };
    struct Layer {
        std::size_t ln1_gain, ln1_bias;
        std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
        std::size_t ln2_gain, ln2_bias;
        std::size_t w1, b1, w2, b2;
    };
    struct HeadBlock {
        std::size_t weight, bias, ln_gain, ln_bias;
    };

    Frontend frontend{};
    std::vector<Layer> layers;
    std::size_t layer_weights = 0;
    std::vector<HeadBlock> head_blocks;
    std::size_t out_weight = 0;
    std::size_t out_bias = 0;

private:
    std::size_t add(std::string name, std::size_t rows, std::size_t cols);

    EncoderConfig config_;
    std::vector<ParamSlot> slots_;
    std::size_t total_ = 0;
};

/// Flat storage for one value per parameter coordinate. Used for weights,
/// gradients and optimizer moments alike.
class ParamBuffer {
public:
    ParamBuffer() = default;
    explicit ParamBuffer(std::shared_ptr<const ParamLayout> layout);

    const ParamLayout& layout() const noexcept { return *layout_; }
    const std::shared_ptr<const ParamLayout>& layout_ptr() const noexcept { return layout_; }

    std::span<double> flat() noexcept { return values_; }
    std::span<const double> flat() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    MatrixMap matrix(std::size_t slot);
    ConstMatrixMap matrix(std::size_t slot) const;
    RowVectorMap row(std::size_t slot);
    ConstRowVectorMap row(std::size_t slot) const;
    std::span<double> span(std::size_t slot);
    std::span<const double> span(std::size_t slot) const;

    void set_zero() noexcept;
    ParamBuffer zeros_like() const { return ParamBuffer(layout_); }

private:
    std::shared_ptr<const ParamLayout> layout_;
    std::vector<double> values_;
};

/// Per-axis population statistics of the training targets.
struct Normalizer {
    std::array<double, kNumAxes> mean{0.0, 0.0, 0.0, 0.0};
    std::array<double, kNumAxes> stddev{1.0, 1.0, 1.0, 1.0};

    RawScores normalize(const AesScores& y) const noexcept;
    friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

struct ModelParams {
    EncoderConfig config;
    ParamBuffer weights;
    Normalizer normalizer;

    /// Seeded random initialization; layer weights start at 1/L.
    static ModelParams initialize(const EncoderConfig& config, std::uint64_t seed);
};

/// Post-layer activations h_{l,t}: one T x d matrix per transformer layer.
struct HiddenStack {
    std::vector<Matrix> layers;

    std::size_t num_layers() const noexcept { return layers.size(); }
    std::size_t frames() const noexcept { return layers.empty() ? 0 : static_cast<std::size_t>(layers[0].rows()); }
    std::size_t dim() const noexcept { return layers.empty() ? 0 : static_cast<std::size_t>(layers[0].cols()); }
};

// ---------------------------------------------------------------------------
// Forward stages. predict() is exactly their composition.

/// Splits the waveform into frames, projects each to d dimensions and
/// layer-normalizes. Waveforms shorter than one frame are zero-padded.
Matrix frontend_frames(std::span<const float> waveform, const ModelParams& params);

/// Pre-norm multi-head self-attention + GeLU FFN stack; returns every
/// layer's output. Throws Error(Usage) when T exceeds max_frames.
HiddenStack transformer_forward(const Matrix& frames, const ModelParams& params);

/// z_l = w_l / sum(w). Throws Error(Numerical) when |sum(w)| <= 1e-8.
std::vector<double> layer_weight_normalize(std::span<const double> w);

/// Time-average of the z-weighted layer sum.
RowVector aggregate_embedding(const HiddenStack& stack, std::span<const double> z);

/// Unit-norm projection. Throws Error(Numerical) when the norm is <= 1e-8.
RowVector l2_normalize(const RowVector& v);

/// Head blocks (linear -> layer-norm -> GeLU) followed by the final linear map.
RawScores mlp_forward(const RowVector& embedding, const ModelParams& params);

/// y_a = raw_a * std_a + mean_a.
AesScores denormalize_scores(const RawScores& raw, const Normalizer& stats) noexcept;

/// Scores one window (at most max_frames frames) of mono 16 kHz audio.
AesScores predict(std::span<const float> waveform, const ModelParams& params);

struct NormalizedTargets {
    Normalizer stats;
    std::vector<RawScores> targets;
};

/// Population mean/std per axis. Needs >= 2 labels; a constant axis raises
/// Error(Data) naming the axis.
NormalizedTargets normalize_targets(std::span<const AesScores> labels);

double gelu(double x) noexcept;
/// d gelu / dx
double gelu_derivative(double x) noexcept;

}  // namespace aes::model
