#include <algorithm>
#include <cmath>
#include <string>

#include "aes/error.hpp"
#include "aes/model.hpp"
#include "aes/rng.hpp"

namespace aes::model {

void EncoderConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::Usage, std::string("invalid encoder config: ") + what);
    };
    require(num_layers >= 1, "num_layers must be >= 1");
    require(hidden_dim >= 1, "hidden_dim must be >= 1");
    require(num_heads >= 1, "num_heads must be >= 1");
    require(hidden_dim % num_heads == 0, "hidden_dim must be divisible by num_heads");
    require(ffn_dim >= 1, "ffn_dim must be >= 1");
    require(frame_size >= 1, "frame_size must be >= 1");
    require(frame_stride >= 1 && frame_stride <= frame_size, "frame_stride must lie in [1, frame_size]");
    require(max_frames >= 1, "max_frames must be >= 1");
    require(head_blocks >= 0, "head_blocks must be >= 0");
}

std::size_t EncoderConfig::frame_count(std::size_t num_samples) const {
    const auto size = static_cast<std::size_t>(frame_size);
    if (num_samples <= size) return 1;
    return 1 + (num_samples - size) / static_cast<std::size_t>(frame_stride);
}

EncoderConfig EncoderConfig::base() {
    EncoderConfig c;
    c.num_layers = 12;
    c.hidden_dim = 768;
    c.num_heads = 12;
    c.ffn_dim = 3072;
    return c;
}

EncoderConfig EncoderConfig::tiny() {
    EncoderConfig c;
    c.num_layers = 2;
    c.hidden_dim = 16;
    c.num_heads = 2;
    c.ffn_dim = 32;
    c.frame_size = 64;
    c.frame_stride = 32;
    c.max_frames = 64;
    c.head_blocks = 2;
    return c;
}

// ---------------------------------------------------------------------------

std::size_t ParamLayout::add(std::string name, std::size_t rows, std::size_t cols) {
    slots_.push_back({std::move(name), rows, cols, total_});
    total_ += rows * cols;
    return slots_.size() - 1;
}

ParamLayout::ParamLayout(const EncoderConfig& config) : config_(config) {
    config.validate();
    const auto d = static_cast<std::size_t>(config.hidden_dim);
    const auto f = static_cast<std::size_t>(config.ffn_dim);
    const auto frame = static_cast<std::size_t>(config.frame_size);

    frontend.weight = add("frontend.weight", frame, d);
    frontend.bias = add("frontend.bias", 1, d);
    frontend.ln_gain = add("frontend.ln.gain", 1, d);
    frontend.ln_bias = add("frontend.ln.bias", 1, d);

    for (int l = 0; l < config.num_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        Layer s{};
        s.ln1_gain = add(p + "ln1.gain", 1, d);
        s.ln1_bias = add(p + "ln1.bias", 1, d);
        s.wq = add(p + "attn.wq", d, d);
        s.bq = add(p + "attn.bq", 1, d);
        s.wk = add(p + "attn.wk", d, d);
        s.bk = add(p + "attn.bk", 1, d);
        s.wv = add(p + "attn.wv", d, d);
        s.bv = add(p + "attn.bv", 1, d);
        s.wo = add(p + "attn.wo", d, d);
        s.bo = add(p + "attn.bo", 1, d);
        s.ln2_gain = add(p + "ln2.gain", 1, d);
        s.ln2_bias = add(p + "ln2.bias", 1, d);
        s.w1 = add(p + "ffn.w1", d, f);
        s.b1 = add(p + "ffn.b1", 1, f);
        s.w2 = add(p + "ffn.w2", f, d);
        s.b2 = add(p + "ffn.b2", 1, d);
        layers.push_back(s);
    }

    layer_weights = add("pool.layer_weights", 1, static_cast<std::size_t>(config.num_layers));

    for (int b = 0; b < config.head_blocks; ++b) {
        const std::string p = "head" + std::to_string(b) + ".";
        HeadBlock s{};
        s.weight = add(p + "weight", d, d);
        s.bias = add(p + "bias", 1, d);
        s.ln_gain = add(p + "ln.gain", 1, d);
        s.ln_bias = add(p + "ln.bias", 1, d);
        head_blocks.push_back(s);
    }
    out_weight = add("head.out.weight", d, kNumAxes);
    out_bias = add("head.out.bias", 1, kNumAxes);
}

std::string ParamLayout::coordinate_name(std::size_t flat_index) const {
    if (flat_index >= total_) return "<out of range>";
    const auto it = std::upper_bound(slots_.begin(), slots_.end(), flat_index,
                                     [](std::size_t i, const ParamSlot& s) { return i < s.offset; });
    const ParamSlot& slot = *std::prev(it);
    const std::size_t local = flat_index - slot.offset;
    if (slot.rows == 1) return slot.name + "[" + std::to_string(local) + "]";
    return slot.name + "[" + std::to_string(local / slot.cols) + "," + std::to_string(local % slot.cols) + "]";
}

// ---------------------------------------------------------------------------

ParamBuffer::ParamBuffer(std::shared_ptr<const ParamLayout> layout)
    : layout_(std::move(layout)), values_(layout_->total_size(), 0.0) {}

MatrixMap ParamBuffer::matrix(std::size_t slot) {
    const ParamSlot& s = layout_->slots()[slot];
    return MatrixMap(values_.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}

ConstMatrixMap ParamBuffer::matrix(std::size_t slot) const {
    const ParamSlot& s = layout_->slots()[slot];
    return ConstMatrixMap(values_.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                          static_cast<Eigen::Index>(s.cols));
}

RowVectorMap ParamBuffer::row(std::size_t slot) {
    const ParamSlot& s = layout_->slots()[slot];
    return RowVectorMap(values_.data() + s.offset, static_cast<Eigen::Index>(s.size()));
}

ConstRowVectorMap ParamBuffer::row(std::size_t slot) const {
    const ParamSlot& s = layout_->slots()[slot];
    return ConstRowVectorMap(values_.data() + s.offset, static_cast<Eigen::Index>(s.size()));
}

std::span<double> ParamBuffer::span(std::size_t slot) {
    const ParamSlot& s = layout_->slots()[slot];
    return {values_.data() + s.offset, s.size()};
}

std::span<const double> ParamBuffer::span(std::size_t slot) const {
    const ParamSlot& s = layout_->slots()[slot];
    return {values_.data() + s.offset, s.size()};
}

void ParamBuffer::set_zero() noexcept { std::fill(values_.begin(), values_.end(), 0.0); }

// ---------------------------------------------------------------------------

ModelParams ModelParams::initialize(const EncoderConfig& config, std::uint64_t seed) {
    ModelParams params;
    params.config = config;
    auto layout = std::make_shared<const ParamLayout>(config);
    params.weights = ParamBuffer(layout);

    auto xavier = [&](std::size_t slot, double scale) {
        const ParamSlot& s = layout->slots()[slot];
        auto g = make_stream(seed, {tag(StreamTag::Init), slot});
        const double bound = scale * std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
        for (double& v : params.weights.span(slot)) v = (2.0 * uniform01(g) - 1.0) * bound;
    };
    auto fill = [&](std::size_t slot, double value) {
        for (double& v : params.weights.span(slot)) v = value;
    };

    xavier(layout->frontend.weight, 1.0);
    fill(layout->frontend.ln_gain, 1.0);
    for (const auto& s : layout->layers) {
        fill(s.ln1_gain, 1.0);
        fill(s.ln2_gain, 1.0);
        for (std::size_t w : {s.wq, s.wk, s.wv, s.wo, s.w1, s.w2}) xavier(w, 1.0);
    }
    fill(layout->layer_weights, 1.0 / config.num_layers);
    for (const auto& s : layout->head_blocks) {
        xavier(s.weight, 1.0);
        fill(s.ln_gain, 1.0);
    }
    xavier(layout->out_weight, 0.5);
    return params;
}

// ---------------------------------------------------------------------------

RawScores Normalizer::normalize(const AesScores& y) const noexcept {
    RawScores out{};
    for (Axis a : kAllAxes) out[index(a)] = (y[a] - mean[index(a)]) / stddev[index(a)];
    return out;
}

AesScores denormalize_scores(const RawScores& raw, const Normalizer& stats) noexcept {
    AesScores y;
    for (Axis a : kAllAxes) y[a] = raw[index(a)] * stats.stddev[index(a)] + stats.mean[index(a)];
    return y;
}

NormalizedTargets normalize_targets(std::span<const AesScores> labels) {
    if (labels.size() < 2) fail(ErrorKind::Data, "target normalization needs at least 2 labels");
    NormalizedTargets out;
    const auto n = static_cast<double>(labels.size());
    for (Axis a : kAllAxes) {
        double sum = 0.0;
        for (const AesScores& y : labels) sum += y[a];
        const double mean = sum / n;
        double ss = 0.0;
        for (const AesScores& y : labels) ss += (y[a] - mean) * (y[a] - mean);
        const double sd = std::sqrt(ss / n);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
            fail(ErrorKind::Data, "zero-variance target axis " + std::string(axis_name(a)));
        out.stats.mean[index(a)] = mean;
        out.stats.stddev[index(a)] = sd;
    }
    out.targets.reserve(labels.size());
    for (const AesScores& y : labels) out.targets.push_back(out.stats.normalize(y));
    return out;
}

}  // namespace aes::model
