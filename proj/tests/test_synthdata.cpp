#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "aes/error.hpp"
#include "aes/fileio.hpp"
#include "aes/metrics.hpp"
#include "aes/synthdata.hpp"

namespace fs = std::filesystem;
using namespace aes;
using namespace aes::synth;

namespace {

double power(const std::vector<float>& v) {
    double s = 0;
    for (float x : v) s += static_cast<double>(x) * x;
    return s / static_cast<double>(v.size());
}

audio::AudioClip unit_power_sine(std::size_t n) {
    audio::AudioClip c;
    c.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        c.samples[i] = static_cast<float>(std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(i) / 16000.0));
    return c;
}

}  // namespace

TEST(Synth, SingleComponentHasOnePeak) {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const SynthClip s = synth_clip(seed, 1, 1.0);
        EXPECT_EQ(count_spectral_peaks(s.clip.samples), 1u) << seed;
    }
}

TEST(Synth, DeterministicAndPeakNormalized) {
    const SynthClip a = synth_clip(9, 5, 1.5);
    const SynthClip b = synth_clip(9, 5, 1.5);
    EXPECT_EQ(a.clip.samples, b.clip.samples);
    EXPECT_EQ(a.clip.samples.size(), 24000u);
    float peak = 0;
    for (float x : a.clip.samples) peak = std::max(peak, std::abs(x));
    EXPECT_NEAR(peak, kPeakLevel, 1e-6);
    EXPECT_NE(synth_clip(10, 5, 1.5).clip.samples, a.clip.samples);
}

TEST(Synth, MoreComponentsAreFlatterAndBusier) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const SynthClip one = synth_clip(seed, 1, 2.0);
        const SynthClip four = synth_clip(seed, 4, 2.0);
        EXPECT_GT(spectral_flatness(four.clip.samples), spectral_flatness(one.clip.samples)) << seed;
        EXPECT_GT(count_onsets(four.clip.samples, 16000), count_onsets(one.clip.samples, 16000)) << seed;
    }
}

TEST(Synth, RejectsBadArguments) {
    EXPECT_THROW(synth_clip(1, 0, 1.0), Error);
    EXPECT_THROW(synth_clip(1, 7, 1.0), Error);
    EXPECT_THROW(synth_clip(1, 2, 0.0), Error);
}

TEST(Degrade, IdentityIsBitExact) {
    const SynthClip s = synth_clip(3, 3, 0.5);
    const Degraded d = degrade(s.clip, DegradationSpec{}, 7);
    EXPECT_EQ(d.clip.samples, s.clip.samples);
    EXPECT_EQ(d.severity, 0.0);
    EXPECT_EQ(degradation_severity(DegradationSpec{}, 16000), 0.0);
}

TEST(Degrade, NoisePowerAtZeroSnr) {
    const audio::AudioClip c = unit_power_sine(160000);
    ASSERT_NEAR(power(c.samples), 1.0, 1e-3);
    DegradationSpec spec;
    spec.snr_db = 0.0;
    const Degraded d = degrade(c, spec, 5);
    std::vector<float> diff(c.samples.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = d.clip.samples[i] - c.samples[i];
    EXPECT_NEAR(power(diff) / power(c.samples), 1.0, 0.05);
}

TEST(Degrade, QuantizerCardinality) {
    const SynthClip s = synth_clip(4, 6, 1.0);
    DegradationSpec spec;
    spec.bits = 4;
    const Degraded d = degrade(s.clip, spec, 1);
    std::set<float> levels(d.clip.samples.begin(), d.clip.samples.end());
    EXPECT_LE(levels.size(), 16u);
    EXPECT_GT(levels.size(), 4u);
}

TEST(Degrade, ClipAndLowpass) {
    const SynthClip s = synth_clip(4, 3, 1.0);
    DegradationSpec spec;
    spec.clip_threshold = 0.3;
    for (float x : degrade(s.clip, spec, 1).clip.samples) EXPECT_LE(std::abs(x), 0.3f);
    DegradationSpec lp;
    lp.lowpass_hz = 500;
    const Degraded d = degrade(s.clip, lp, 1);
    const auto before = power_spectrum(s.clip.samples);
    const auto after = power_spectrum(d.clip.samples);
    double hb = 0, ha = 0;
    for (std::size_t k = before.size() / 2; k < before.size(); ++k) hb += before[k], ha += after[k];
    EXPECT_LT(ha, 0.1 * hb);
}

TEST(Degrade, SeverityMonotoneAndBounded) {
    double prev = -1;
    for (int step = 0; step <= 10; ++step) {
        const double t = step / 10.0;
        const double sev = degradation_severity(spec_for_intensities(t, t, t, t, 16000), 16000);
        EXPECT_GE(sev, prev - 1e-9);
        EXPECT_GE(sev, 0.0);
        EXPECT_LE(sev, 1.0 + 1e-12);
        prev = sev;
    }
    DegradationSpec s;
    s.snr_db = 20.0;
    EXPECT_NEAR(degradation_severity(s, 16000), 0.35 * 0.5, 1e-12);
}

TEST(Labels, ProxyRule) {
    const AesScores a = proxy_labels(0.0, 1, 3, 0);
    EXPECT_DOUBLE_EQ(a.pq, 9.5);
    EXPECT_DOUBLE_EQ(a.pc, 1.0);
    const AesScores b = proxy_labels(1.0, 6, 3, 0);
    EXPECT_DOUBLE_EQ(b.pq, 1.5);
    EXPECT_DOUBLE_EQ(b.pc, 9.0);
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::uint64_t i = 0; i < 200; ++i) {
        const double sev = u(g);
        const int comp = 1 + static_cast<int>(i % 6);
        const AesScores l = proxy_labels(sev, comp, 11, i);
        EXPECT_TRUE(l.in_label_range());
        EXPECT_LE(std::abs(l.ce - std::clamp(0.7 * l.pq + 0.3 * l.pc, 1.0, 10.0)), 0.5 + 1e-12);
        EXPECT_LE(std::abs(l.cu - std::clamp(0.7 * l.pq + 0.3 * (11 - l.pc), 1.0, 10.0)), 0.5 + 1e-12);
    }
}

TEST(Corpus, BuildSchemaAndDeterminism) {
    const fs::path a = fs::temp_directory_path() / "aes_corpus_a";
    const fs::path b = fs::temp_directory_path() / "aes_corpus_b";
    fs::remove_all(a);
    fs::remove_all(b);
    CorpusOptions o;
    o.duration_s = 0.5;
    const auto entries = build_corpus(100, 21, a, o);
    o.jobs = 3;
    build_corpus(100, 21, b, o);
    ASSERT_EQ(entries.size(), 100u);
    std::size_t wavs = 0;
    for (const auto& f : fs::directory_iterator(a / "clips")) wavs += f.path().extension() == ".wav";
    EXPECT_EQ(wavs, 100u);
    const std::string manifest = read_file(a / "manifest.jsonl");
    EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 100);
    EXPECT_EQ(manifest, read_file(b / "manifest.jsonl"));
    EXPECT_EQ(read_file(a / "clips/00042.wav"), read_file(b / "clips/00042.wav"));
    for (const auto& e : entries) {
        EXPECT_TRUE(e.require_scores().in_label_range());
        EXPECT_TRUE(e.system_id);
    }
}

TEST(Corpus, SeverityDrivesProductionQuality) {
    CorpusOptions o;
    o.duration_s = 0.25;
    std::vector<double> sev, pq;
    for (std::size_t i = 0; i < 120; ++i) {
        const CorpusItem it = corpus_item(i, 5, o);
        sev.push_back(it.severity);
        pq.push_back(it.labels.pq);
        EXPECT_EQ(it.components, 1 + static_cast<int>(i % 6));
    }
    EXPECT_LT(metrics::pearson(sev, pq), -0.95);
}
