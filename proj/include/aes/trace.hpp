#pragma once

// Forward pass with every intermediate retained, for reverse-mode
// differentiation in the training module.

#include <vector>

#include "aes/model.hpp"

namespace aes::model {

struct LayerNormCache {
    Matrix normalized;         // (x - mean) * inv_std, before gain/bias
    Eigen::VectorXd inv_std;   // one per row
};

struct LayerTrace {
    Matrix input;  // layer input x_{l-1}
    LayerNormCache ln1;
    Matrix ln1_out;
    Matrix q, k, v;
    std::vector<Matrix> probs;  // softmax(QK^T/sqrt(dh)) per head
    Matrix context;             // concatenated head outputs, before W_o
    Matrix mid;                 // x_{l-1} + attention
    LayerNormCache ln2;
    Matrix ln2_out;
    Matrix ffn_pre;             // before GeLU
    Matrix ffn_act;             // after GeLU
};

struct HeadBlockTrace {
    Matrix input;  // 1 x d
    Matrix pre;    // input * W + b
    LayerNormCache ln;
    Matrix ln_out;
};

struct ForwardTrace {
    Matrix frames;  // T x frame_size raw sample frames
    LayerNormCache frontend_ln;
    std::vector<LayerTrace> layers;
    HiddenStack stack;
    std::vector<double> z;
    double weight_sum = 0.0;
    RowVector pooled;       // before L2 normalization
    double pooled_norm = 0.0;
    RowVector embedding;    // unit norm
    std::vector<HeadBlockTrace> head;
    Matrix head_output_input;  // 1 x d, input of the final linear map
    RawScores raw{};
};

ForwardTrace forward_traced(std::span<const float> waveform, const ModelParams& params);

/// Row-wise layer normalization with affine gain/bias. Fills `cache` when given.
Matrix layer_norm(const Matrix& x, ConstRowVectorMap gain, ConstRowVectorMap bias, LayerNormCache* cache);

/// Raw sample frames (T x frame_size), zero-padding a short tail-less input.
Matrix frame_waveform(std::span<const float> waveform, const EncoderConfig& config);

/// Sinusoidal position table, T x d.
Matrix positional_encoding(std::size_t frames, std::size_t dim);

}  // namespace aes::model
