#include <cmath>
#include <numbers>
#include <string>

#include "aes/error.hpp"
#include "aes/model.hpp"
#include "aes/trace.hpp"

namespace aes::model {

double gelu(double x) noexcept { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_derivative(double x) noexcept {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

Matrix layer_norm(const Matrix& x, ConstRowVectorMap gain, ConstRowVectorMap bias, LayerNormCache* cache) {
    const Eigen::Index rows = x.rows();
    const Eigen::Index cols = x.cols();
    Matrix normalized(rows, cols);
    Eigen::VectorXd inv_std(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().sum() / static_cast<double>(cols);
        inv_std(r) = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        normalized.row(r) = (x.row(r).array() - mean) * inv_std(r);
    }
    Matrix out = (normalized.array().rowwise() * gain.array()).rowwise() + bias.array();
    if (cache) {
        cache->normalized = std::move(normalized);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

Matrix frame_waveform(std::span<const float> waveform, const EncoderConfig& config) {
    const auto size = static_cast<std::size_t>(config.frame_size);
    const auto stride = static_cast<std::size_t>(config.frame_stride);
    const std::size_t count = config.frame_count(waveform.size());
    Matrix frames = Matrix::Zero(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(size));
    for (std::size_t t = 0; t < count; ++t) {
        const std::size_t start = t * stride;
        const std::size_t n = std::min(size, waveform.size() - std::min(start, waveform.size()));
        for (std::size_t i = 0; i < n; ++i)
            frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = waveform[start + i];
    }
    return frames;
}

Matrix positional_encoding(std::size_t frames, std::size_t dim) {
    Matrix pe(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dim));
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
            const double angle = static_cast<double>(t) * rate;
            pe(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

namespace {

Matrix frontend_impl(std::span<const float> waveform, const ModelParams& params, Matrix* frames_out,
                     LayerNormCache* ln_cache) {
    const ParamLayout& layout = params.weights.layout();
    Matrix frames = frame_waveform(waveform, params.config);
    Matrix projected = frames * params.weights.matrix(layout.frontend.weight);
    projected.rowwise() += params.weights.row(layout.frontend.bias);
    Matrix out = layer_norm(projected, params.weights.row(layout.frontend.ln_gain),
                            params.weights.row(layout.frontend.ln_bias), ln_cache);
    if (frames_out) *frames_out = std::move(frames);
    return out;
}

Matrix affine(const Matrix& x, const ParamBuffer& w, std::size_t weight, std::size_t bias) {
    Matrix y = x * w.matrix(weight);
    y.rowwise() += w.row(bias);
    return y;
}

Matrix layer_forward(const Matrix& x, const ParamBuffer& w, const ParamLayout::Layer& s, int num_heads,
                     LayerTrace* trace) {
    const Eigen::Index d = x.cols();
    const Eigen::Index dh = d / num_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    LayerNormCache ln1;
    Matrix a = layer_norm(x, w.row(s.ln1_gain), w.row(s.ln1_bias), trace ? &ln1 : nullptr);
    Matrix q = affine(a, w, s.wq, s.bq);
    Matrix k = affine(a, w, s.wk, s.bk);
    Matrix v = affine(a, w, s.wv, s.bv);

    Matrix context(x.rows(), d);
    std::vector<Matrix> probs;
    if (trace) probs.reserve(static_cast<std::size_t>(num_heads));
    for (int h = 0; h < num_heads; ++h) {
        const Eigen::Index c0 = h * dh;
        Matrix scores = (q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose()) * scale;
        for (Eigen::Index r = 0; r < scores.rows(); ++r) {
            const double m = scores.row(r).maxCoeff();
            scores.row(r) = (scores.row(r).array() - m).exp();
            scores.row(r) /= scores.row(r).sum();
        }
        context.middleCols(c0, dh) = scores * v.middleCols(c0, dh);
        if (trace) probs.push_back(std::move(scores));
    }

    Matrix mid = x + affine(context, w, s.wo, s.bo);

    LayerNormCache ln2;
    Matrix b = layer_norm(mid, w.row(s.ln2_gain), w.row(s.ln2_bias), trace ? &ln2 : nullptr);
    Matrix pre = affine(b, w, s.w1, s.b1);
    Matrix act = pre.unaryExpr([](double u) { return gelu(u); });
    Matrix out = mid + affine(act, w, s.w2, s.b2);

    if (trace) {
        trace->input = x;
        trace->ln1 = std::move(ln1);
        trace->ln1_out = std::move(a);
        trace->q = std::move(q);
        trace->k = std::move(k);
        trace->v = std::move(v);
        trace->probs = std::move(probs);
        trace->context = std::move(context);
        trace->mid = std::move(mid);
        trace->ln2 = std::move(ln2);
        trace->ln2_out = std::move(b);
        trace->ffn_pre = std::move(pre);
        trace->ffn_act = std::move(act);
    }
    return out;
}

HiddenStack transformer_impl(const Matrix& frames, const ModelParams& params, std::vector<LayerTrace>* traces) {
    const EncoderConfig& cfg = params.config;
    if (frames.rows() > cfg.max_frames)
        fail(ErrorKind::Usage, "sequence of " + std::to_string(frames.rows()) + " frames exceeds max_frames " +
                                   std::to_string(cfg.max_frames) + "; window the input first");
    if (frames.cols() != cfg.hidden_dim) fail(ErrorKind::Usage, "frame width does not match hidden_dim");

    Matrix x = frames;
    if (cfg.positional_encoding)
        x += positional_encoding(static_cast<std::size_t>(frames.rows()), static_cast<std::size_t>(frames.cols()));

    const ParamLayout& layout = params.weights.layout();
    HiddenStack stack;
    stack.layers.reserve(layout.layers.size());
    if (traces) traces->assign(layout.layers.size(), LayerTrace{});
    for (std::size_t l = 0; l < layout.layers.size(); ++l) {
        x = layer_forward(x, params.weights, layout.layers[l], cfg.num_heads, traces ? &(*traces)[l] : nullptr);
        stack.layers.push_back(x);
    }
    return stack;
}

RawScores mlp_impl(const RowVector& embedding, const ModelParams& params, std::vector<HeadBlockTrace>* traces,
                   Matrix* out_input) {
    const ParamLayout& layout = params.weights.layout();
    const ParamBuffer& w = params.weights;
    Matrix u = embedding;
    if (traces) traces->assign(layout.head_blocks.size(), HeadBlockTrace{});
    for (std::size_t b = 0; b < layout.head_blocks.size(); ++b) {
        const auto& s = layout.head_blocks[b];
        Matrix pre = affine(u, w, s.weight, s.bias);
        LayerNormCache ln;
        Matrix normed = layer_norm(pre, w.row(s.ln_gain), w.row(s.ln_bias), traces ? &ln : nullptr);
        Matrix next = normed.unaryExpr([](double v) { return gelu(v); });
        if (traces) {
            HeadBlockTrace& t = (*traces)[b];
            t.input = std::move(u);
            t.pre = std::move(pre);
            t.ln = std::move(ln);
            t.ln_out = std::move(normed);
        }
        u = std::move(next);
    }
    const Matrix out = affine(u, w, layout.out_weight, layout.out_bias);
    if (out_input) *out_input = std::move(u);
    return {out(0, 0), out(0, 1), out(0, 2), out(0, 3)};
}

}  // namespace

Matrix frontend_frames(std::span<const float> waveform, const ModelParams& params) {
    return frontend_impl(waveform, params, nullptr, nullptr);
}

HiddenStack transformer_forward(const Matrix& frames, const ModelParams& params) {
    return transformer_impl(frames, params, nullptr);
}

std::vector<double> layer_weight_normalize(std::span<const double> w) {
    if (w.empty()) fail(ErrorKind::Usage, "empty layer-weight vector");
    double sum = 0.0;
    for (double v : w) sum += v;
    if (!(std::abs(sum) > kDegenerateEpsilon))
        fail(ErrorKind::Numerical, "degenerate layer weights: |sum(w)| <= 1e-8");
    std::vector<double> z(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) z[i] = w[i] / sum;
    return z;
}

RowVector aggregate_embedding(const HiddenStack& stack, std::span<const double> z) {
    if (stack.layers.empty()) fail(ErrorKind::Usage, "empty hidden stack");
    if (z.size() != stack.num_layers()) fail(ErrorKind::Usage, "layer-weight count does not match the hidden stack");
    RowVector combined = RowVector::Zero(static_cast<Eigen::Index>(stack.dim()));
    for (std::size_t l = 0; l < stack.num_layers(); ++l) combined += z[l] * stack.layers[l].colwise().sum();
    return combined / static_cast<double>(stack.frames());
}

RowVector l2_normalize(const RowVector& v) {
    const double norm = v.norm();
    if (!(norm > kDegenerateEpsilon)) fail(ErrorKind::Numerical, "degenerate embedding: norm <= 1e-8");
    return v / norm;
}

RawScores mlp_forward(const RowVector& embedding, const ModelParams& params) {
    return mlp_impl(embedding, params, nullptr, nullptr);
}

AesScores predict(std::span<const float> waveform, const ModelParams& params) {
    const Matrix frames = frontend_frames(waveform, params);
    const HiddenStack stack = transformer_forward(frames, params);
    const std::vector<double> z = layer_weight_normalize(params.weights.span(params.weights.layout().layer_weights));
    const RowVector embedding = l2_normalize(aggregate_embedding(stack, z));
    return denormalize_scores(mlp_forward(embedding, params), params.normalizer);
}

ForwardTrace forward_traced(std::span<const float> waveform, const ModelParams& params) {
    ForwardTrace trace;
    const Matrix frames = frontend_impl(waveform, params, &trace.frames, &trace.frontend_ln);
    trace.stack = transformer_impl(frames, params, &trace.layers);

    const auto w = params.weights.span(params.weights.layout().layer_weights);
    trace.z = layer_weight_normalize(w);
    trace.weight_sum = 0.0;
    for (double v : w) trace.weight_sum += v;

    trace.pooled = aggregate_embedding(trace.stack, trace.z);
    trace.pooled_norm = trace.pooled.norm();
    trace.embedding = l2_normalize(trace.pooled);
    trace.raw = mlp_impl(trace.embedding, params, &trace.head, &trace.head_output_input);
    return trace;
}

}  // namespace aes::model
