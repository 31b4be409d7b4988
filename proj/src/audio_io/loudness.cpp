#include <cmath>
#include <limits>
#include <numbers>

#include "aes/audio_io.hpp"
#include "aes/error.hpp"

namespace aes::audio {

namespace {

constexpr double kAbsoluteGateLufs = -70.0;
constexpr double kRelativeGateLu = -10.0;
constexpr double kBlockSeconds = 0.4;
constexpr double kStepSeconds = 0.1;

struct Biquad {
    double b0, b1, b2, a1, a2;
};

// K-weighting pre-filter (high shelf) and RLB high-pass, derived for an
// arbitrary sample rate through the bilinear transform.
std::pair<Biquad, Biquad> k_weighting(double rate) {
    double f0 = 1681.974450955533;
    const double gain_db = 3.999843853973347;
    double q = 0.7071752369554196;
    double k = std::tan(std::numbers::pi * f0 / rate);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    double a0 = 1.0 + k / q + k * k;
    const Biquad shelf{(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0, (vh - vb * k / q + k * k) / a0,
                       2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};

    f0 = 38.13547087602444;
    q = 0.5003270373238773;
    k = std::tan(std::numbers::pi * f0 / rate);
    a0 = 1.0 + k / q + k * k;
    const Biquad highpass{1.0, -2.0, 1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
    return {shelf, highpass};
}

// Channel weights for the usual layouts; 5.0 and 5.1 surrounds get +1.5 dB,
// LFE is excluded.
double channel_weight(int channel, int channels) {
    if (channels == 5 && channel >= 3) return 1.41;
    if (channels == 6) {
        if (channel == 3) return 0.0;
        if (channel >= 4) return 1.41;
    }
    return 1.0;
}

double to_lufs(double power) { return -0.691 + 10.0 * std::log10(power); }

}  // namespace

double integrated_loudness(const AudioClip& clip) {
    validate(clip);
    const std::size_t frames = clip.frames();
    if (frames == 0) return -std::numeric_limits<double>::infinity();

    const auto [shelf, highpass] = k_weighting(clip.sample_rate);
    const auto ch = static_cast<std::size_t>(clip.channels);

    // prefix[c][i] = sum of squared K-weighted samples of channel c before frame i.
    std::vector<std::vector<double>> prefix(ch, std::vector<double>(frames + 1, 0.0));
    for (std::size_t c = 0; c < ch; ++c) {
        double s1 = 0, s2 = 0, h1 = 0, h2 = 0;  // direct form II states
        for (std::size_t i = 0; i < frames; ++i) {
            const double x = clip.samples[i * ch + c];
            const double w = x - shelf.a1 * s1 - shelf.a2 * s2;
            const double y = shelf.b0 * w + shelf.b1 * s1 + shelf.b2 * s2;
            s2 = s1;
            s1 = w;
            const double v = y - highpass.a1 * h1 - highpass.a2 * h2;
            const double z = highpass.b0 * v + highpass.b1 * h1 + highpass.b2 * h2;
            h2 = h1;
            h1 = v;
            prefix[c][i + 1] = prefix[c][i] + z * z;
        }
    }

    auto block_length = static_cast<std::size_t>(std::llround(kBlockSeconds * clip.sample_rate));
    const auto step = static_cast<std::size_t>(std::llround(kStepSeconds * clip.sample_rate));
    std::size_t num_blocks = 1;
    if (frames >= block_length) {
        num_blocks = (frames - block_length) / step + 1;
    } else {
        block_length = frames;  // shorter than one gating block: measure the whole clip
    }

    std::vector<double> block_power(num_blocks);
    for (std::size_t b = 0; b < num_blocks; ++b) {
        const std::size_t start = b * step;
        double power = 0.0;
        for (std::size_t c = 0; c < ch; ++c) {
            const double energy = prefix[c][start + block_length] - prefix[c][start];
            power += channel_weight(static_cast<int>(c), clip.channels) * energy / static_cast<double>(block_length);
        }
        block_power[b] = power;
    }

    double sum = 0.0;
    std::size_t count = 0;
    for (double p : block_power) {
        if (p > 0.0 && to_lufs(p) > kAbsoluteGateLufs) {
            sum += p;
            ++count;
        }
    }
    if (count == 0) return -std::numeric_limits<double>::infinity();

    const double relative_gate = to_lufs(sum / static_cast<double>(count)) + kRelativeGateLu;
    double gated_sum = 0.0;
    std::size_t gated = 0;
    for (double p : block_power) {
        if (p > 0.0) {
            const double l = to_lufs(p);
            if (l > kAbsoluteGateLufs && l > relative_gate) {
                gated_sum += p;
                ++gated;
            }
        }
    }
    return to_lufs(gated_sum / static_cast<double>(gated));
}

NormalizedClip loudness_normalize(const AudioClip& clip, double target_lufs) {
    NormalizedClip result;
    result.input_lufs = integrated_loudness(clip);
    if (!std::isfinite(result.input_lufs)) {
        result.clip = clip;
        result.silent = true;
        return result;
    }

    auto scaled = [&clip](double gain) {
        AudioClip out = clip;
        for (float& s : out.samples) s = static_cast<float>(s * gain);
        return out;
    };

    double gain = std::pow(10.0, (target_lufs - result.input_lufs) / 20.0);
    // Gating against the fixed -70 LUFS floor is not scale-invariant; one
    // correction pass absorbs blocks that crossed the floor.
    const double measured = integrated_loudness(scaled(gain));
    if (std::isfinite(measured) && std::abs(measured - target_lufs) > 1e-3)
        gain *= std::pow(10.0, (target_lufs - measured) / 20.0);

    result.gain = gain;
    result.clip = scaled(gain);
    return result;
}

}  // namespace aes::audio
