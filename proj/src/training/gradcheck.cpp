#include <chrono>
#include <cmath>

#include "aes/error.hpp"
#include "aes/rng.hpp"
#include "aes/training.hpp"

namespace aes::training {

namespace {

std::vector<RawScores> raw_outputs(const std::vector<std::vector<float>>& waves, const ModelParams& params) {
    std::vector<RawScores> out;
    out.reserve(waves.size());
    const auto z = model::layer_weight_normalize(params.weights.span(params.weights.layout().layer_weights));
    for (const auto& w : waves) {
        const auto stack = model::transformer_forward(model::frontend_frames(w, params), params);
        out.push_back(model::mlp_forward(model::l2_normalize(model::aggregate_embedding(stack, z)), params));
    }
    return out;
}

double mean_loss(const std::vector<RawScores>& preds, const std::vector<RawScores>& targets) {
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) total += loss_aes(preds[i], targets[i]).total;
    return total / static_cast<double>(preds.size());
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

GradCheckReport grad_check(const EncoderConfig& config, std::uint64_t seed, double tolerance,
                           const GradCheckOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    if (options.batch_size == 0 || options.frames_per_sample == 0) fail(ErrorKind::Usage, "grad_check needs samples");

    ModelParams params = ModelParams::initialize(config, seed);
    // Move away from the structured initialization (zero biases, unit gains)
    // so every term of the backward pass is exercised.
    {
        auto g = make_stream(seed, {tag(StreamTag::GradCheck), 0});
        for (double& v : params.weights.flat()) v += 0.1 * (2.0 * uniform01(g) - 1.0);
    }

    const std::size_t length = static_cast<std::size_t>(config.frame_size) +
                               (options.frames_per_sample - 1) * static_cast<std::size_t>(config.frame_stride);
    std::vector<std::vector<float>> waves(options.batch_size, std::vector<float>(length));
    std::vector<RawScores> targets(options.batch_size);
    {
        auto g = make_stream(seed, {tag(StreamTag::GradCheck), 1});
        for (auto& w : waves)
            for (float& s : w) s = static_cast<float>(uniform01(g) - 0.5);
        for (auto& t : targets)
            for (double& v : t) v = 3.0 * uniform01(g) - 1.5;
    }
    if (options.kink_axis) {
        const auto base = raw_outputs(waves, params);
        targets[0][index(*options.kink_axis)] = base[0][index(*options.kink_axis)];
    }

    std::vector<BatchItem> batch;
    for (std::size_t i = 0; i < waves.size(); ++i) batch.push_back({waves[i], targets[i]});
    BackwardResult analytic = backward(batch, params);
    if (options.corrupt_coordinate && *options.corrupt_coordinate < analytic.grads.size())
        analytic.grads.flat()[*options.corrupt_coordinate] *= 2.0;

    const std::vector<RawScores> base = raw_outputs(waves, params);

    GradCheckReport report;
    report.parameter_count = params.weights.size();
    const model::ParamLayout& layout = params.weights.layout();
    auto theta = params.weights.flat();
    const double h = options.step;

    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + h;
        const auto plus = raw_outputs(waves, params);
        theta[i] = saved - h;
        const auto minus = raw_outputs(waves, params);
        theta[i] = saved;

        bool straddles_kink = false;
        for (std::size_t s = 0; s < waves.size() && !straddles_kink; ++s) {
            for (std::size_t a = 0; a < kNumAxes; ++a) {
                const double r0 = targets[s][a] - base[s][a];
                const double rp = targets[s][a] - plus[s][a];
                const double rm = targets[s][a] - minus[s][a];
                if ((r0 == 0.0 && plus[s][a] != minus[s][a]) || sign(rp) != sign(rm)) {
                    straddles_kink = true;
                    break;
                }
            }
        }
        if (straddles_kink) {
            report.skipped.push_back(layout.coordinate_name(i));
            continue;
        }

        const double numeric = (mean_loss(plus, targets) - mean_loss(minus, targets)) / (2.0 * h);
        const double a = analytic.grads.flat()[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), options.relative_floor});
        const double rel = std::abs(a - numeric) / denom;
        ++report.checked;
        if (report.worst_coordinate.empty() || rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_coordinate = layout.coordinate_name(i);
        }
        if (!(rel < tolerance)) report.failing.push_back(layout.coordinate_name(i));
    }

    report.passed = report.failing.empty() && report.checked > 0;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace aes::training
