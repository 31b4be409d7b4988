#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aes/audio_io.hpp"
#include "aes/error.hpp"
#include "aes/manifest.hpp"
#include "aes/model.hpp"
#include "aes/scores.hpp"

namespace aes::inference {

struct UtterancePrediction {
    AesScores scores;
    std::vector<audio::Window> windows;
    std::vector<AesScores> per_window;
    /// Window length / total length; sums to 1.
    std::vector<double> weights;

    std::size_t window_count() const noexcept { return windows.size(); }
};

/// Scores one window of mono 16 kHz audio.
using WindowScorer = std::function<AesScores(std::span<const float>)>;

/// Windowed length-weighted averaging over an arbitrary scorer. Windows
/// shorter than `min_window` samples are folded into the preceding window.
/// The utterance score is sum(len_i * s_i) / sum(len_i).
UtterancePrediction sliding_window_predict(std::span<const float> mono16k, const WindowScorer& scorer,
                                           std::size_t min_window, const audio::WindowOptions& options = {});

/// Model-backed variant. Clips not in model format pass through to_mono_16k.
UtterancePrediction sliding_window_predict(const audio::AudioClip& clip, const model::ModelParams& params,
                                           const audio::WindowOptions& options = {});

struct FilePrediction {
    std::string audio_path;  // as given in the manifest
    std::optional<UtterancePrediction> prediction;
    std::optional<ErrorKind> error_kind;
    std::string error;  // empty on success

    bool ok() const noexcept { return prediction.has_value(); }
};

struct BatchOptions {
    int jobs = 1;
    audio::WindowOptions windows;
    /// Relative audio paths resolve against this directory.
    std::filesystem::path base_dir;
};

/// Scores every entry independently. Per-file failures are recorded in the
/// result instead of aborting; output order follows the input.
std::vector<FilePrediction> batch_predict(std::span<const ManifestEntry> entries, const model::ModelParams& params,
                                          const BatchOptions& options = {});

/// Prediction manifest: a copy of each successfully scored entry with its
/// scores replaced and a window_count field.
std::vector<ManifestEntry> prediction_records(std::span<const ManifestEntry> entries,
                                              std::span<const FilePrediction> results);

}  // namespace aes::inference
