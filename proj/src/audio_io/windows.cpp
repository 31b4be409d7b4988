#include <algorithm>
#include <cmath>

#include "aes/audio_io.hpp"
#include "aes/error.hpp"

namespace aes::audio {

std::size_t WindowPlan::total_length() const noexcept {
    std::size_t total = 0;
    for (const Window& w : windows) total += w.length;
    return total;
}

WindowPlan chunk_windows(std::size_t num_samples, int sample_rate, const WindowOptions& options) {
    if (sample_rate <= 0) fail(ErrorKind::Usage, "sample rate must be positive");
    if (!(options.window_seconds > 0.0)) fail(ErrorKind::Usage, "window length must be positive");
    if (!(options.overlap >= 0.0 && options.overlap < 1.0)) fail(ErrorKind::Usage, "window overlap must lie in [0, 1)");

    WindowPlan plan;
    plan.window_samples = static_cast<std::size_t>(std::llround(sample_rate * options.window_seconds));
    if (plan.window_samples == 0) fail(ErrorKind::Usage, "window shorter than one sample");

    std::size_t hop = plan.window_samples;
    if (options.overlap > 0.0) {
        hop = static_cast<std::size_t>(std::llround(static_cast<double>(plan.window_samples) * (1.0 - options.overlap)));
        hop = std::max<std::size_t>(hop, 1);
    }

    for (std::size_t start = 0; start < num_samples; start += hop) {
        const std::size_t length = std::min(plan.window_samples, num_samples - start);
        plan.windows.push_back({start, length});
        if (start + length >= num_samples) break;
    }
    return plan;
}

WindowPlan chunk_windows(const AudioClip& clip, const WindowOptions& options) {
    validate(clip);
    if (!clip.is_model_format()) fail(ErrorKind::Usage, "chunk_windows expects mono 16 kHz audio");
    return chunk_windows(clip.samples.size(), clip.sample_rate, options);
}

}  // namespace aes::audio
