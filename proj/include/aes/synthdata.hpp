#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "aes/audio_io.hpp"
#include "aes/manifest.hpp"
#include "aes/scores.hpp"

namespace aes::synth {

inline constexpr int kMinComponents = 1;
inline constexpr int kMaxComponents = 6;
inline constexpr double kPeakLevel = 0.9;

struct SynthClip {
    audio::AudioClip clip;
    int components = 1;
};

/// Mixes `components` generators with staggered onsets and peak-normalizes
/// the mix to 0.9. Component 0 is a pure sine; later components cycle
/// through AM noise bursts, chirps, pulse trains and harmonic partial stacks.
SynthClip synth_clip(std::uint64_t seed, int components, double duration_s,
                     int sample_rate = audio::kModelSampleRate);

/// Each stage is skipped when its field is empty.
struct DegradationSpec {
    std::optional<double> snr_db;          // additive white Gaussian noise
    std::optional<double> clip_threshold;  // hard clip at +-threshold, (0, 1]
    std::optional<double> lowpass_hz;      // single-pole lowpass cutoff
    std::optional<int> bits;               // uniform quantizer depth, 1..24

    bool is_identity() const noexcept { return !snr_db && !clip_threshold && !lowpass_hz && !bits; }
};

/// Normalized intensities in [0, 1] and their severity weights:
///   noise    clamp((40 - snr_db) / 40)                  weight 0.35
///   clipping clamp((1 - threshold) / 0.9)               weight 0.20
///   lowpass  clamp(log2(nyquist / cutoff) / 4)          weight 0.25
///   bits     clamp((16 - bits) / 14)                    weight 0.20
/// severity = weighted sum, in [0, 1].
struct SeverityWeights {
    static constexpr double kNoise = 0.35;
    static constexpr double kClip = 0.20;
    static constexpr double kLowpass = 0.25;
    static constexpr double kBits = 0.20;
};

double degradation_severity(const DegradationSpec& spec, int sample_rate);

/// Inverse of the intensity maps above. An intensity of 0 leaves that stage
/// out; bit depth is rounded to an integer.
DegradationSpec spec_for_intensities(double noise, double clip, double lowpass, double bits, int sample_rate);

struct Degraded {
    audio::AudioClip clip;
    double severity = 0.0;
};

/// Noise at the given SNR, then hard clipping, single-pole lowpass and
/// quantization, in that order. The identity spec returns the input
/// bit-for-bit.
Degraded degrade(const audio::AudioClip& clip, const DegradationSpec& spec, std::uint64_t seed);

/// Proxy labels:
///   pq = 9.5 - 8 * severity
///   pc = 1 + 8 * (components - 1) / 5
///   ce = clamp(0.7 pq + 0.3 pc + n_ce, 1, 10)
///   cu = clamp(0.7 pq + 0.3 (11 - pc) + n_cu, 1, 10)
/// with n_ce, n_cu uniform in [-0.5, 0.5] from the label-noise stream.
AesScores proxy_labels(double severity, int components, std::uint64_t seed, std::uint64_t clip_index);

struct CorpusOptions {
    double duration_s = 2.0;
    /// Number of severity buckets on the grid. Clips in bucket b draw their
    /// degradation level from [b/B, (b+1)/B); the bucket is the system_id.
    int severity_buckets = 10;
    int jobs = 1;
};

/// Writes clips/NNNNN.wav and manifest.jsonl under out_dir and returns the
/// manifest entries (audio paths relative to out_dir). Extra fields
/// "severity" and "components" record the generating parameters.
std::vector<ManifestEntry> build_corpus(std::size_t n, std::uint64_t seed, const std::filesystem::path& out_dir,
                                        const CorpusOptions& options = {});

/// In-memory variant of build_corpus: same clips and labels, nothing written.
struct CorpusItem {
    audio::AudioClip clip;
    AesScores labels;
    double severity = 0.0;
    int components = 1;
    int bucket = 0;
};
CorpusItem corpus_item(std::size_t i, std::uint64_t seed, const CorpusOptions& options = {});

// ---------------------------------------------------------------------------
// Analysis utilities.

/// Blackman-windowed power spectrum of a mono signal (FFT length = next
/// power of two >= samples), bins 0..N/2.
std::vector<double> power_spectrum(std::span<const float> mono);

/// Local maxima within `floor_db` of the strongest bin, with peaks closer
/// than `min_separation_bins` merged.
std::size_t count_spectral_peaks(std::span<const float> mono, double floor_db = -40.0,
                                 std::size_t min_separation_bins = 4);

/// Geometric mean over arithmetic mean of the power spectrum, in [0, 1].
double spectral_flatness(std::span<const float> mono);

/// Peaks of half-wave rectified log-magnitude spectral flux (32 ms frames,
/// 10 ms hop) above 10% of the largest flux value.
std::size_t count_onsets(std::span<const float> mono, int sample_rate);

}  // namespace aes::synth
