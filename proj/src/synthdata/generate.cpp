#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <thread>

#include <json.hpp>

#include "aes/error.hpp"
#include "aes/rng.hpp"
#include "aes/synthdata.hpp"

namespace aes::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Kind { Sine, AmNoise, Chirp, Pulses, Partials };

Kind component_kind(int k) {
    if (k == 0) return Kind::Sine;
    static constexpr Kind cycle[] = {Kind::AmNoise, Kind::Chirp, Kind::Pulses, Kind::Partials};
    return cycle[(k - 1) % 4];
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

// Adds one generator, starting at `onset`, into `mix`.
void render_component(Kind kind, std::mt19937_64& g, std::size_t onset, int sr, std::vector<double>& mix) {
    const std::size_t n = mix.size();
    const double fade = 0.005 * sr;
    auto put = [&](std::size_t i, double v) {
        const double t = static_cast<double>(i - onset);
        const double ramp = t < fade ? 0.5 - 0.5 * std::cos(std::numbers::pi * t / fade) : 1.0;
        mix[i] += ramp * v;
    };
    const double len = static_cast<double>(n - onset) / sr;

    switch (kind) {
        case Kind::Sine: {
            const double f = 220.0 * std::exp2(2.0 * uniform01(g));
            const double phase = kTwoPi * uniform01(g);
            for (std::size_t i = onset; i < n; ++i) put(i, std::sin(kTwoPi * f * (i - onset) / sr + phase));
            break;
        }
        case Kind::AmNoise: {
            const double rate = lerp(2.0, 8.0, uniform01(g));
            for (std::size_t i = onset; i < n; ++i) {
                const double env = std::sin(std::numbers::pi * rate * (i - onset) / sr);
                put(i, 0.8 * env * env * (2.0 * uniform01(g) - 1.0));
            }
            break;
        }
        case Kind::Chirp: {
            const double f0 = lerp(300.0, 600.0, uniform01(g));
            const double f1 = lerp(2000.0, 5000.0, uniform01(g));
            const double k = std::log(f1 / f0) / std::max(len, 1e-3);
            for (std::size_t i = onset; i < n; ++i) {
                const double t = static_cast<double>(i - onset) / sr;
                put(i, 0.6 * std::sin(kTwoPi * f0 * (std::exp(k * t) - 1.0) / k));
            }
            break;
        }
        case Kind::Pulses: {
            const double rate = lerp(3.0, 8.0, uniform01(g));
            const double fc = lerp(1500.0, 3500.0, uniform01(g));
            const double period = sr / rate;
            for (std::size_t i = onset; i < n; ++i) {
                const double t = std::fmod(static_cast<double>(i - onset), period) / sr;
                put(i, 0.9 * std::exp(-t / 0.006) * std::sin(kTwoPi * fc * t));
            }
            break;
        }
        case Kind::Partials: {
            const double f0 = lerp(100.0, 300.0, uniform01(g));
            const int count = 3 + static_cast<int>(uniform_index(g, 4));
            for (std::size_t i = onset; i < n; ++i) {
                const double t = static_cast<double>(i - onset) / sr;
                double v = 0.0;
                for (int h = 1; h <= count; ++h) v += std::sin(kTwoPi * f0 * h * t) / h;
                put(i, 0.5 * v);
            }
            break;
        }
    }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Standard normal via Box-Muller on the library's own uniform source.
double gaussian(std::mt19937_64& g) {
    const double u1 = 1.0 - uniform01(g);  // (0, 1]
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace

SynthClip synth_clip(std::uint64_t seed, int components, double duration_s, int sample_rate) {
    if (components < kMinComponents || components > kMaxComponents)
        fail(ErrorKind::Usage, "components must lie in [1, 6]");
    if (!(duration_s > 0.0 && duration_s <= 60.0)) fail(ErrorKind::Usage, "duration must lie in (0, 60] seconds");
    if (sample_rate <= 0) fail(ErrorKind::Usage, "sample rate must be positive");

    const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    std::vector<double> mix(n, 0.0);
    for (int k = 0; k < components; ++k) {
        auto g = make_stream(seed, {tag(StreamTag::Synth), static_cast<std::uint64_t>(k)});
        const std::size_t onset = k == 0 ? 0 : n * static_cast<std::size_t>(k) / (2 * static_cast<std::size_t>(components));
        render_component(component_kind(k), g, onset, sample_rate, mix);
    }

    double peak = 0.0;
    for (double v : mix) peak = std::max(peak, std::abs(v));
    const double scale = peak > 0.0 ? kPeakLevel / peak : 0.0;

    SynthClip out;
    out.components = components;
    out.clip.sample_rate = sample_rate;
    out.clip.channels = 1;
    out.clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.clip.samples[i] = static_cast<float>(mix[i] * scale);
    return out;
}

double degradation_severity(const DegradationSpec& spec, int sample_rate) {
    double s = 0.0;
    if (spec.snr_db) s += SeverityWeights::kNoise * clamp01((40.0 - *spec.snr_db) / 40.0);
    if (spec.clip_threshold) s += SeverityWeights::kClip * clamp01((1.0 - *spec.clip_threshold) / 0.9);
    if (spec.lowpass_hz) s += SeverityWeights::kLowpass * clamp01(std::log2(0.5 * sample_rate / *spec.lowpass_hz) / 4.0);
    if (spec.bits) s += SeverityWeights::kBits * clamp01((16.0 - *spec.bits) / 14.0);
    return clamp01(s);
}

DegradationSpec spec_for_intensities(double noise, double clip, double lowpass, double bits, int sample_rate) {
    DegradationSpec spec;
    if (noise > 0.0) spec.snr_db = 40.0 - 40.0 * clamp01(noise);
    if (clip > 0.0) spec.clip_threshold = 1.0 - 0.9 * clamp01(clip);
    if (lowpass > 0.0) spec.lowpass_hz = 0.5 * sample_rate * std::exp2(-4.0 * clamp01(lowpass));
    if (bits > 0.0) spec.bits = static_cast<int>(std::lround(16.0 - 14.0 * clamp01(bits)));
    return spec;
}

Degraded degrade(const audio::AudioClip& clip, const DegradationSpec& spec, std::uint64_t seed) {
    audio::validate(clip);
    if (spec.clip_threshold && !(*spec.clip_threshold > 0.0 && *spec.clip_threshold <= 1.0))
        fail(ErrorKind::Usage, "clip threshold must lie in (0, 1]");
    if (spec.lowpass_hz && !(*spec.lowpass_hz > 0.0)) fail(ErrorKind::Usage, "lowpass cutoff must be positive");
    if (spec.bits && (*spec.bits < 1 || *spec.bits > 24)) fail(ErrorKind::Usage, "bit depth must lie in [1, 24]");

    Degraded out;
    out.clip = clip;
    if (spec.is_identity()) return out;

    std::vector<double> x(clip.samples.begin(), clip.samples.end());
    const auto channels = static_cast<std::size_t>(clip.channels);

    if (spec.snr_db) {
        double power = 0.0;
        for (double v : x) power += v * v;
        power /= std::max<std::size_t>(x.size(), 1);
        if (power > 0.0) {
            const double sigma = std::sqrt(power / std::pow(10.0, *spec.snr_db / 10.0));
            auto g = make_stream(seed, {tag(StreamTag::Degrade)});
            for (double& v : x) v += sigma * gaussian(g);
        }
    }
    if (spec.clip_threshold) {
        const double t = *spec.clip_threshold;
        for (double& v : x) v = std::clamp(v, -t, t);
    }
    if (spec.lowpass_hz) {
        const double alpha = 1.0 - std::exp(-kTwoPi * *spec.lowpass_hz / clip.sample_rate);
        for (std::size_t c = 0; c < channels; ++c) {
            double y = 0.0;
            for (std::size_t i = c; i < x.size(); i += channels) {
                y += alpha * (x[i] - y);
                x[i] = y;
            }
        }
    }
    if (spec.bits) {
        const double scale = std::ldexp(1.0, *spec.bits - 1);
        for (double& v : x) v = std::clamp(std::round(v * scale), -scale, scale - 1.0) / scale;
    }

    for (std::size_t i = 0; i < x.size(); ++i) out.clip.samples[i] = static_cast<float>(x[i]);
    out.severity = degradation_severity(spec, clip.sample_rate);
    return out;
}

AesScores proxy_labels(double severity, int components, std::uint64_t seed, std::uint64_t clip_index) {
    auto g = make_stream(seed, {tag(StreamTag::LabelNoise), clip_index});
    AesScores s;
    s.pq = 9.5 - 8.0 * clamp01(severity);
    s.pc = 1.0 + 8.0 * (std::clamp(components, kMinComponents, kMaxComponents) - 1) / 5.0;
    const double n_ce = uniform01(g) - 0.5;
    const double n_cu = uniform01(g) - 0.5;
    s.ce = std::clamp(0.7 * s.pq + 0.3 * s.pc + n_ce, kLabelMin, kLabelMax);
    s.cu = std::clamp(0.7 * s.pq + 0.3 * (11.0 - s.pc) + n_cu, kLabelMin, kLabelMax);
    return s;
}

CorpusItem corpus_item(std::size_t i, std::uint64_t seed, const CorpusOptions& options) {
    if (options.severity_buckets < 1) fail(ErrorKind::Usage, "severity_buckets must be >= 1");
    const auto buckets = static_cast<std::size_t>(options.severity_buckets);

    CorpusItem item;
    item.components = 1 + static_cast<int>(i % kMaxComponents);
    item.bucket = static_cast<int>((i / kMaxComponents) % buckets);

    auto g = make_stream(seed, {tag(StreamTag::CorpusGrid), i});
    const double level = (item.bucket + uniform01(g)) / static_cast<double>(buckets);
    double intensity[4];
    for (double& v : intensity) v = clamp01(level * (0.6 + 0.8 * uniform01(g)));
    const DegradationSpec spec =
        spec_for_intensities(intensity[0], intensity[1], intensity[2], intensity[3], audio::kModelSampleRate);

    const SynthClip clean = synth_clip(stream_key(seed, {tag(StreamTag::Synth), i}), item.components,
                                       options.duration_s, audio::kModelSampleRate);
    Degraded d = degrade(clean.clip, spec, stream_key(seed, {tag(StreamTag::Degrade), i}));
    // Match what a float32 WAV export would store.
    for (float& v : d.clip.samples) v = std::clamp(v, -1.0f, 1.0f);
    item.clip = std::move(d.clip);
    item.severity = d.severity;
    item.labels = proxy_labels(item.severity, item.components, seed, i);
    return item;
}

std::vector<ManifestEntry> build_corpus(std::size_t n, std::uint64_t seed, const std::filesystem::path& out_dir,
                                        const CorpusOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "clips", ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + (out_dir / "clips").string() + ": " + ec.message());

    std::vector<ManifestEntry> entries(n);
    auto make_one = [&](std::size_t i) {
        const CorpusItem item = corpus_item(i, seed, options);
        char name[32];
        std::snprintf(name, sizeof name, "clips/%05zu.wav", i);
        audio::write_wav(out_dir / name, item.clip);

        char sid[16];
        std::snprintf(sid, sizeof sid, "sev%02d", item.bucket);
        ManifestEntry& e = entries[i];
        e.audio_path = name;
        e.set_scores(item.labels);
        e.system_id = sid;
        e.set_extra("severity", nlohmann::json(item.severity).dump());
        e.set_extra("components", std::to_string(item.components));
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)),
                                                      std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) make_one(i);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) make_one(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    write_manifest(out_dir / "manifest.jsonl", entries);
    return entries;
}

}  // namespace aes::synth
