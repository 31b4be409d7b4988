#include <algorithm>
#include <cmath>

#include "aes/error.hpp"
#include "aes/training.hpp"

namespace aes::training {

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::Usage, std::string("invalid training config: ") + what);
    };
    require(learning_rate > 0.0, "learning_rate must be > 0");
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
    require(epsilon > 0.0, "epsilon must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(steps >= 1, "steps must be >= 1");
    require(warmup_steps >= 0, "warmup_steps must be >= 0");
    require(chunk_seconds > 0.0, "chunk_seconds must be > 0");
    require(jobs >= 1, "jobs must be >= 1");
    require(std::any_of(axes.begin(), axes.end(), [](bool b) { return b; }), "at least one axis must be trained");
}

double learning_rate_at(const TrainConfig& config, std::int64_t step) {
    const auto warmup = static_cast<std::int64_t>(config.warmup_steps);
    if (warmup > 0 && step <= warmup)
        return config.learning_rate * static_cast<double>(step) / static_cast<double>(warmup);
    if (!config.decay) return config.learning_rate;
    // Linear decay reaching zero one step past the end of the schedule.
    const auto total = static_cast<std::int64_t>(config.steps);
    const double remaining = static_cast<double>(std::max<std::int64_t>(0, total + 1 - step));
    const double span = static_cast<double>(std::max<std::int64_t>(1, total + 1 - warmup));
    return config.learning_rate * std::min(1.0, remaining / span);
}

void adam_step(ParamBuffer& params, const ParamBuffer& grads, AdamState& state, const TrainConfig& config) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
        fail(ErrorKind::Usage, "adam_step: parameter, gradient and moment shapes disagree");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double lr = learning_rate_at(config, state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);

    auto p = params.flat();
    const auto g = grads.flat();
    auto m = state.m.flat();
    auto v = state.v.flat();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

double clip_gradient_norm(ParamBuffer& grads, double max_norm) {
    double ss = 0.0;
    for (double g : grads.flat()) ss += g * g;
    const double norm = std::sqrt(ss);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grads.flat()) g *= scale;
    }
    return norm;
}

}  // namespace aes::training
