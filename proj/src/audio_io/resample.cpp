#include <cmath>
#include <numbers>
#include <numeric>

#include "aes/audio_io.hpp"
#include "aes/error.hpp"

namespace aes::audio {

namespace {

double kaiser(double x, double half_width, double beta) {
    const double r = x / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, beta);
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

// Passband edge as a fraction of the lower Nyquist frequency.
constexpr double kRolloff = 0.95;

}  // namespace

Resampler::Resampler(int input_rate, int output_rate) : in_rate_(input_rate), out_rate_(output_rate) {
    if (input_rate <= 0 || output_rate <= 0) fail(ErrorKind::Usage, "resampler rates must be positive");
    const long g = std::gcd(static_cast<long>(input_rate), static_cast<long>(output_rate));
    up_ = output_rate / g;
    down_ = input_rate / g;

    const double cutoff = kRolloff * std::min(1.0, static_cast<double>(output_rate) / input_rate);
    constexpr int half = kTaps / 2;
    table_.assign(static_cast<std::size_t>(up_) * kTaps, 0.0);
    for (long phase = 0; phase < up_; ++phase) {
        const double frac = static_cast<double>(phase) / static_cast<double>(up_);
        double* row = table_.data() + phase * kTaps;
        double sum = 0.0;
        for (int j = 0; j < kTaps; ++j) {
            // Tap j reads input sample (base - half + 1 + j).
            const double x = static_cast<double>(j - half + 1) - frac;
            row[j] = cutoff * sinc(cutoff * x) * kaiser(x, half, kKaiserBeta);
            sum += row[j];
        }
        for (int j = 0; j < kTaps; ++j) row[j] /= sum;
    }
}

std::vector<float> Resampler::process(std::span<const float> mono) const {
    const auto n_in = static_cast<long long>(mono.size());
    // round(n_in * out / in), halves rounded up.
    const long long n_out = (2 * n_in * out_rate_ + in_rate_) / (2LL * in_rate_);
    std::vector<float> out(static_cast<std::size_t>(n_out));
    constexpr int half = kTaps / 2;

    for (long long n = 0; n < n_out; ++n) {
        const long long num = n * down_;
        const long long base = num / up_;
        const long long phase = num % up_;
        const double* row = table_.data() + phase * kTaps;
        const long long first = base - half + 1;
        double acc = 0.0;
        if (first >= 0 && first + kTaps <= n_in) {
            const float* src = mono.data() + first;
            for (int j = 0; j < kTaps; ++j) acc += row[j] * src[j];
        } else {
            for (int j = 0; j < kTaps; ++j) {
                const long long i = first + j;
                if (i >= 0 && i < n_in) acc += row[j] * mono[static_cast<std::size_t>(i)];
            }
        }
        out[static_cast<std::size_t>(n)] = static_cast<float>(acc);
    }
    return out;
}

AudioClip mixdown(const AudioClip& clip) {
    validate(clip);
    if (clip.channels == 1) return clip;
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.channels = 1;
    const std::size_t frames = clip.frames();
    const auto ch = static_cast<std::size_t>(clip.channels);
    out.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < ch; ++c) acc += clip.samples[f * ch + c];
        out.samples[f] = static_cast<float>(acc / static_cast<double>(ch));
    }
    return out;
}

AudioClip to_mono_16k(const AudioClip& clip) {
    validate(clip);
    if (clip.is_model_format()) return clip;
    AudioClip mono = mixdown(clip);
    if (mono.sample_rate == kModelSampleRate) return mono;
    const Resampler resampler(mono.sample_rate, kModelSampleRate);
    AudioClip out;
    out.sample_rate = kModelSampleRate;
    out.channels = 1;
    out.samples = resampler.process(mono.samples);
    return out;
}

}  // namespace aes::audio
