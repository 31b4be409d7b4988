#include "aes/audio_io.hpp"
#include "aes/error.hpp"
#include "aes/training.hpp"

namespace aes::training {

AesScores aggregate_ratings(std::span<const AesScores> ratings) {
    if (ratings.empty()) fail(ErrorKind::Data, "no ratings to aggregate");
    AesScores mean;
    for (Axis a : kAllAxes) {
        double sum = 0.0;
        for (const AesScores& r : ratings) sum += r[a];
        mean[a] = sum / static_cast<double>(ratings.size());
    }
    return mean;
}

std::vector<TrainingClip> load_training_clips(std::span<const ManifestEntry> entries,
                                              const std::filesystem::path& base_dir) {
    std::vector<TrainingClip> out;
    out.reserve(entries.size());
    for (const ManifestEntry& e : entries) {
        TrainingClip c;
        c.label = e.require_scores();
        if (!c.label.in_label_range())
            fail(ErrorKind::Data, "record '" + e.audio_path + "' has a label outside [1, 10]");
        c.waveform = audio::to_mono_16k(audio::load_wav(resolve_audio_path(base_dir, e.audio_path))).samples;
        if (c.waveform.empty()) fail(ErrorKind::Data, "record '" + e.audio_path + "' decodes to an empty clip");
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace aes::training
