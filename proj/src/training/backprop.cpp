#include <cmath>
#include <thread>

#include "aes/error.hpp"
#include "aes/training.hpp"

namespace aes::training {

using model::ConstRowVectorMap;
using model::ForwardTrace;
using model::LayerNormCache;
using model::Matrix;
using model::ParamLayout;
using model::RowVector;

namespace {

// Returns d loss / d x of a row-wise layer norm; accumulates gain/bias grads.
Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, ConstRowVectorMap gain,
                           ParamBuffer& grads, std::size_t gain_slot, std::size_t bias_slot) {
    grads.row(gain_slot) += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
    grads.row(bias_slot) += dy.colwise().sum();

    const Matrix dxhat = dy.array().rowwise() * gain.array();
    const auto n = static_cast<double>(dy.cols());
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double sum = dxhat.row(r).sum();
        const double dot = dxhat.row(r).dot(cache.normalized.row(r));
        dx.row(r) = (cache.inv_std(r) / n) *
                    (n * dxhat.row(r).array() - sum - cache.normalized.row(r).array() * dot).matrix();
    }
    return dx;
}

// y = x W + b. Accumulates dW, db; returns dx.
Matrix affine_backward(const Matrix& dy, const Matrix& x, const ParamBuffer& params, ParamBuffer& grads,
                       std::size_t weight_slot, std::size_t bias_slot) {
    grads.matrix(weight_slot).noalias() += x.transpose() * dy;
    grads.row(bias_slot) += dy.colwise().sum();
    return dy * params.matrix(weight_slot).transpose();
}

Matrix gelu_backward(const Matrix& dy, const Matrix& pre) {
    return dy.array() * pre.unaryExpr([](double u) { return model::gelu_derivative(u); }).array();
}

}  // namespace

LossBreakdown loss_aes(const RawScores& pred, const RawScores& target, const AxisMask& axes) {
    LossBreakdown out;
    for (std::size_t a = 0; a < kNumAxes; ++a) {
        if (!axes[a]) continue;
        const double r = target[a] - pred[a];
        out.per_axis[a] = r * r + std::abs(r);
        out.total += out.per_axis[a];
    }
    return out;
}

RawScores loss_gradient(const RawScores& pred, const RawScores& target, const AxisMask& axes) {
    RawScores g{};
    for (std::size_t a = 0; a < kNumAxes; ++a) {
        if (!axes[a]) continue;
        const double r = target[a] - pred[a];
        const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
        g[a] = -(2.0 * r + sign);
    }
    return g;
}

void backprop_sample(const ForwardTrace& trace, const ModelParams& params, const RawScores& output_grad,
                     ParamBuffer& grads) {
    const ParamLayout& layout = params.weights.layout();
    const ParamBuffer& w = params.weights;
    const EncoderConfig& cfg = params.config;

    // Final projection and head blocks.
    Matrix dout(1, static_cast<Eigen::Index>(kNumAxes));
    for (std::size_t a = 0; a < kNumAxes; ++a) dout(0, static_cast<Eigen::Index>(a)) = output_grad[a];
    Matrix du = affine_backward(dout, trace.head_output_input, w, grads, layout.out_weight, layout.out_bias);
    for (std::size_t b = layout.head_blocks.size(); b-- > 0;) {
        const auto& s = layout.head_blocks[b];
        const auto& t = trace.head[b];
        const Matrix dnormed = gelu_backward(du, t.ln_out);
        const Matrix dpre = layer_norm_backward(dnormed, t.ln, w.row(s.ln_gain), grads, s.ln_gain, s.ln_bias);
        du = affine_backward(dpre, t.input, w, grads, s.weight, s.bias);
    }

    // e = p / |p|
    const RowVector de = du.row(0);
    const RowVector dp = (de - trace.embedding * trace.embedding.dot(de)) / trace.pooled_norm;

    // p = (1/T) sum_l z_l sum_t h_{l,t};  z_l = w_l / S
    const std::size_t num_layers = trace.stack.num_layers();
    const auto frames = static_cast<double>(trace.stack.frames());
    std::vector<double> dz(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) dz[l] = trace.stack.layers[l].colwise().sum().dot(dp) / frames;
    double dz_dot_z = 0.0;
    for (std::size_t l = 0; l < num_layers; ++l) dz_dot_z += dz[l] * trace.z[l];
    auto dlayer_weights = grads.span(layout.layer_weights);
    for (std::size_t l = 0; l < num_layers; ++l) dlayer_weights[l] += (dz[l] - dz_dot_z) / trace.weight_sum;

    // Transformer layers, last to first. `carry` is d loss / d(layer output)
    // arriving from the layer above.
    const Eigen::Index d = cfg.hidden_dim;
    const Eigen::Index dh = d / cfg.num_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto T = static_cast<Eigen::Index>(trace.stack.frames());
    Matrix carry = Matrix::Zero(T, d);

    for (std::size_t l = num_layers; l-- > 0;) {
        const auto& s = layout.layers[l];
        const auto& t = trace.layers[l];

        Matrix dlayer_out = carry;
        dlayer_out.rowwise() += dp * (trace.z[l] / frames);

        // out = mid + GELU(LN2(mid) W1 + b1) W2 + b2
        Matrix dmid = dlayer_out;
        const Matrix dact = affine_backward(dlayer_out, t.ffn_act, w, grads, s.w2, s.b2);
        const Matrix dpre = gelu_backward(dact, t.ffn_pre);
        const Matrix dln2 = affine_backward(dpre, t.ln2_out, w, grads, s.w1, s.b1);
        dmid += layer_norm_backward(dln2, t.ln2, w.row(s.ln2_gain), grads, s.ln2_gain, s.ln2_bias);

        // mid = x + Attn(LN1(x)) Wo + bo
        Matrix dx = dmid;
        const Matrix dcontext = affine_backward(dmid, t.context, w, grads, s.wo, s.bo);
        Matrix dq(T, d), dk(T, d), dv(T, d);
        for (int h = 0; h < cfg.num_heads; ++h) {
            const Eigen::Index c0 = h * dh;
            const Matrix& p = t.probs[static_cast<std::size_t>(h)];
            const Matrix dctx = dcontext.middleCols(c0, dh);
            const Matrix dprobs = dctx * t.v.middleCols(c0, dh).transpose();
            dv.middleCols(c0, dh).noalias() = p.transpose() * dctx;
            Matrix dscores = p.array() * (dprobs.array().colwise() - (dprobs.array() * p.array()).rowwise().sum());
            dscores *= scale;
            dq.middleCols(c0, dh).noalias() = dscores * t.k.middleCols(c0, dh);
            dk.middleCols(c0, dh).noalias() = dscores.transpose() * t.q.middleCols(c0, dh);
        }
        Matrix dln1 = affine_backward(dq, t.ln1_out, w, grads, s.wq, s.bq);
        dln1 += affine_backward(dk, t.ln1_out, w, grads, s.wk, s.bk);
        dln1 += affine_backward(dv, t.ln1_out, w, grads, s.wv, s.bv);
        dx += layer_norm_backward(dln1, t.ln1, w.row(s.ln1_gain), grads, s.ln1_gain, s.ln1_bias);

        carry = std::move(dx);
    }

    // Positional encodings are constants; the frontend sees `carry` directly.
    const Matrix dprojected = layer_norm_backward(carry, trace.frontend_ln, w.row(layout.frontend.ln_gain), grads,
                                                  layout.frontend.ln_gain, layout.frontend.ln_bias);
    grads.matrix(layout.frontend.weight).noalias() += trace.frames.transpose() * dprojected;
    grads.row(layout.frontend.bias) += dprojected.colwise().sum();
}

BackwardResult backward(std::span<const BatchItem> batch, const ModelParams& params, const AxisMask& axes,
                        int jobs) {
    if (batch.empty()) fail(ErrorKind::Usage, "backward needs a non-empty batch");
    const std::size_t n = batch.size();

    struct SampleOut {
        LossBreakdown loss;
        RawScores pred{};
    };
    std::vector<SampleOut> outs(n);

    BackwardResult result;
    result.grads = params.weights.zeros_like();
    result.predictions.resize(n);

    auto run_sample = [&](std::size_t i, ParamBuffer& scratch) {
        const ForwardTrace trace = model::forward_traced(batch[i].waveform, params);
        outs[i].pred = trace.raw;
        outs[i].loss = loss_aes(trace.raw, batch[i].target, axes);
        scratch.set_zero();
        backprop_sample(trace, params, loss_gradient(trace.raw, batch[i].target, axes), scratch);
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        ParamBuffer scratch = params.weights.zeros_like();
        for (std::size_t i = 0; i < n; ++i) {
            run_sample(i, scratch);
            auto dst = result.grads.flat();
            const auto src = scratch.flat();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    } else {
        std::vector<ParamBuffer> per_sample(n);
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t wkr = 0; wkr < workers; ++wkr) {
            pool.emplace_back([&, wkr] {
                try {
                    for (std::size_t i = wkr; i < n; i += workers) {
                        per_sample[i] = params.weights.zeros_like();
                        run_sample(i, per_sample[i]);
                    }
                } catch (...) {
                    errors[wkr] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = result.grads.flat();
            const auto src = per_sample[i].flat();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& g : result.grads.flat()) g *= inv_n;
    for (std::size_t i = 0; i < n; ++i) {
        result.loss += outs[i].loss.total;
        for (std::size_t a = 0; a < kNumAxes; ++a) result.per_axis[a] += outs[i].loss.per_axis[a];
        result.predictions[i] = outs[i].pred;
    }
    result.loss *= inv_n;
    for (double& v : result.per_axis) v *= inv_n;

    if (!std::isfinite(result.loss)) fail(ErrorKind::Numerical, "non-finite training loss");
    for (double g : result.grads.flat())
        if (!std::isfinite(g)) fail(ErrorKind::Numerical, "non-finite gradient");
    return result;
}

}  // namespace aes::training
