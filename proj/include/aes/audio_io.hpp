#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace aes::audio {

inline constexpr int kModelSampleRate = 16000;
inline constexpr double kDefaultWindowSeconds = 10.0;
inline constexpr double kDefaultTargetLufs = -23.0;

/// Decoded waveform. Multi-channel audio is interleaved.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = kModelSampleRate;
    int channels = 1;

    std::size_t frames() const noexcept {
        return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0;
    }
    double duration_seconds() const noexcept {
        return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
    }
    bool is_model_format() const noexcept { return channels == 1 && sample_rate == kModelSampleRate; }
};

/// Throws Error(Data) unless sample_rate > 0, channels >= 1 and the sample
/// count is a multiple of channels.
void validate(const AudioClip& clip);

/// Reads PCM16, PCM24 and IEEE float32 RIFF/WAVE files (including
/// WAVE_FORMAT_EXTENSIBLE wrappers of those). Integer samples are divided by
/// 2^(bits-1). Unreadable files raise ErrorKind::Io, other sample formats
/// ErrorKind::UnsupportedCodec, short data chunks ErrorKind::Truncated.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes a float32 WAV. Samples are clamped to [-1, 1] on export only.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Channel-average mixdown followed by windowed-sinc resampling to 16 kHz.
/// Clips already in model format are returned unchanged.
AudioClip to_mono_16k(const AudioClip& clip);

/// Arithmetic mean of channels.
AudioClip mixdown(const AudioClip& clip);

/// Band-limited polyphase resampler: Kaiser-windowed sinc with a fixed number
/// of taps per output sample. Output length is round(frames * out / in).
class Resampler {
public:
    static constexpr int kTaps = 64;
    static constexpr double kKaiserBeta = 8.6;

    Resampler(int input_rate, int output_rate);

    std::vector<float> process(std::span<const float> mono) const;

    int input_rate() const noexcept { return in_rate_; }
    int output_rate() const noexcept { return out_rate_; }

private:
    int in_rate_;
    int out_rate_;
    long up_;    // output_rate / gcd
    long down_;  // input_rate / gcd
    std::vector<double> table_;  // up_ phases x kTaps, DC-normalized
};

// ---------------------------------------------------------------------------
// Loudness (ITU-R BS.1770-4 integrated loudness with absolute and relative
// gating).

/// Integrated loudness in LUFS; -infinity when every gating block falls below
/// the absolute gate (or the clip is empty).
double integrated_loudness(const AudioClip& clip);

struct NormalizedClip {
    AudioClip clip;
    double gain = 1.0;          // linear gain that was applied
    double input_lufs = 0.0;    // measured before normalization
    bool silent = false;        // true: loudness undefined, clip returned unchanged
};

/// Scales the clip by a single linear gain so its integrated loudness equals
/// target_lufs. Silent clips come back unchanged with silent = true.
NormalizedClip loudness_normalize(const AudioClip& clip, double target_lufs = kDefaultTargetLufs);

// ---------------------------------------------------------------------------
// Windowing for utterance-level inference.

struct Window {
    std::size_t start = 0;
    std::size_t length = 0;
    friend bool operator==(const Window&, const Window&) = default;
};

struct WindowPlan {
    std::size_t window_samples = 0;
    std::vector<Window> windows;

    std::size_t total_length() const noexcept;
};

struct WindowOptions {
    double window_seconds = kDefaultWindowSeconds;
    /// Fraction of a window shared with the next one, in [0, 1). The default 0
    /// gives contiguous, non-overlapping windows.
    double overlap = 0.0;
};

/// Splits a mono clip of `num_samples` at `sample_rate` into windows of
/// sample_rate * window_seconds samples; the final partial window is kept.
WindowPlan chunk_windows(std::size_t num_samples, int sample_rate, const WindowOptions& options = {});

/// Convenience overload; the clip must be mono 16 kHz.
WindowPlan chunk_windows(const AudioClip& clip, const WindowOptions& options = {});

}  // namespace aes::audio
