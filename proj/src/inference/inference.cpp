#include "aes/inference.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "aes/error.hpp"

namespace aes::inference {

UtterancePrediction sliding_window_predict(std::span<const float> mono16k, const WindowScorer& scorer,
                                           std::size_t min_window, const audio::WindowOptions& options) {
    if (mono16k.empty()) fail(ErrorKind::Data, "cannot score an empty clip");
    audio::WindowPlan plan = audio::chunk_windows(mono16k.size(), audio::kModelSampleRate, options);
    auto& windows = plan.windows;
    if (windows.size() > 1 && windows.back().length < min_window) {
        const audio::Window tail = windows.back();
        windows.pop_back();
        windows.back().length = tail.start + tail.length - windows.back().start;
    }

    UtterancePrediction out;
    out.windows = windows;
    double total = 0.0;
    for (const audio::Window& w : windows) total += static_cast<double>(w.length);

    std::array<double, kNumAxes> acc{};
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const audio::Window& w = windows[i];
        AesScores s;
        try {
            s = scorer(mono16k.subspan(w.start, w.length));
        } catch (const Error& e) {
            fail(e.kind(), "window " + std::to_string(i) + ": " + e.what());
        }
        const auto len = static_cast<double>(w.length);
        for (Axis a : kAllAxes) acc[index(a)] += len * s[a];
        out.per_window.push_back(s);
        out.weights.push_back(len / total);
    }
    for (Axis a : kAllAxes) out.scores[a] = acc[index(a)] / total;
    return out;
}

UtterancePrediction sliding_window_predict(const audio::AudioClip& clip, const model::ModelParams& params,
                                           const audio::WindowOptions& options) {
    audio::validate(clip);
    const audio::AudioClip mono = clip.is_model_format() ? clip : audio::to_mono_16k(clip);
    auto scorer = [&params](std::span<const float> w) { return model::predict(w, params); };
    // Shrink windows that would not fit the encoder; leave room for a merged tail.
    const auto& c = params.config;
    const double fit_s = static_cast<double>((c.max_frames - 1) * c.frame_stride) / audio::kModelSampleRate;
    audio::WindowOptions opts = options;
    opts.window_seconds = std::min(opts.window_seconds, fit_s);
    return sliding_window_predict(mono.samples, scorer, static_cast<std::size_t>(c.frame_size), opts);
}

std::vector<FilePrediction> batch_predict(std::span<const ManifestEntry> entries, const model::ModelParams& params,
                                          const BatchOptions& options) {
    std::vector<FilePrediction> results(entries.size());
    auto score_one = [&](std::size_t i) {
        FilePrediction& r = results[i];
        r.audio_path = entries[i].audio_path;
        try {
            const auto clip = audio::load_wav(resolve_audio_path(options.base_dir, entries[i].audio_path));
            r.prediction = sliding_window_predict(clip, params, options.windows);
        } catch (const Error& e) {
            r.error_kind = e.kind();
            r.error = e.what();
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)), std::max<std::size_t>(entries.size(), 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < entries.size(); ++i) score_one(i);
        return results;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < entries.size(); i += workers) score_one(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

std::vector<ManifestEntry> prediction_records(std::span<const ManifestEntry> entries,
                                              std::span<const FilePrediction> results) {
    if (entries.size() != results.size()) fail(ErrorKind::Usage, "entries and results differ in length");
    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!results[i].ok()) continue;
        ManifestEntry e = entries[i];
        e.set_scores(results[i].prediction->scores);
        e.set_extra("window_count", std::to_string(results[i].prediction->window_count()));
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace aes::inference
