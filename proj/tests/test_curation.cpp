#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "aes/curation.hpp"
#include "aes/error.hpp"

namespace fs = std::filesystem;
using namespace aes;
using namespace aes::curation;

namespace {

std::vector<ManifestEntry> scored(const std::vector<double>& pq) {
    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < pq.size(); ++i) {
        ManifestEntry e;
        e.audio_path = "a" + std::to_string(i) + ".wav";
        e.caption = "caption " + std::to_string(i);
        e.scores[index(Axis::PQ)] = pq[i];
        out.push_back(e);
    }
    return out;
}

std::vector<double> distinct(std::size_t n, unsigned seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(1, 10);
    std::vector<double> v(n);
    for (double& x : v) x = u(g);
    return v;
}

}  // namespace

TEST(Filter, KeepsTableFractions) {
    const auto entries = scored(distinct(1000, 1));
    EXPECT_EQ(filter_manifest(entries, Axis::PQ, 25).kept.size(), 750u);
    EXPECT_EQ(filter_manifest(entries, Axis::PQ, 50).kept.size(), 500u);
    const FilterResult r = filter_manifest(entries, Axis::PQ, 50);
    EXPECT_EQ(r.report.kept + r.report.dropped, 1000u);
    for (const auto& e : r.kept) EXPECT_GE(*e.scores[0], r.report.threshold);
}

TEST(Filter, FractionPropertyOnDistinctScores) {
    for (std::size_t n : {4u, 100u, 1000u, 2000u})
        for (double p : {25.0, 50.0, 75.0}) {
            const auto r = filter_manifest(scored(distinct(n, static_cast<unsigned>(n))), Axis::PQ, p);
            EXPECT_EQ(r.kept.size(), static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1 - p / 100.0)))) << n << " " << p;
        }
}

TEST(Filter, TieFloodKeepsAll) {
    EXPECT_EQ(filter_manifest(scored(std::vector<double>(10, 6.0)), Axis::PQ, 50).kept.size(), 10u);
}

TEST(Filter, MissingScoreListsPath) {
    auto entries = scored({1, 2, 3});
    entries[1].scores[0].reset();
    try {
        filter_manifest(entries, Axis::PQ, 50);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Data);
        EXPECT_NE(std::string(e.what()).find("a1.wav"), std::string::npos);
    }
}

TEST(Filter, PercentileThreshold) {
    const std::vector<double> v{2, 4, 6, 8};
    EXPECT_EQ(percentile_threshold(v, 50), 5.0);
    EXPECT_EQ(percentile_threshold(v, 0), 2.0);
    EXPECT_EQ(percentile_threshold(v, 100), 8.0);
}

TEST(Prompt, Rendering) {
    EXPECT_EQ(quantize_score(7.3, 2), 7.5);
    EXPECT_EQ(quality_prefix(7.3, 2), "Audio quality:7.5");
    EXPECT_EQ(quality_prefix(7.34, 5), "Audio quality:7.4");
    EXPECT_EQ(quality_prefix(6.0, 2), "Audio quality:6.0");
    EXPECT_EQ(quantize_score(8.5, 2), 8.5);
    EXPECT_EQ(render_score(10.0), "10.0");
    EXPECT_EQ(render_score(7.2), "7.2");
    EXPECT_EQ(parse_quality_prefix("Audio quality:7.5 rain"), 7.5);
    EXPECT_FALSE(parse_quality_prefix("Audio quality: x"));
    EXPECT_FALSE(parse_quality_prefix("rain on a roof"));
}

TEST(Prompt, GridAndReparseProperty) {
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> u(1, 10);
    for (int trial = 0; trial < 1000; ++trial) {
        const double y = u(g);
        for (int r : {2, 5}) {
            const double q = quantize_score(y, r);
            EXPECT_EQ(q * r, std::round(q * r));
            EXPECT_LE(std::abs(q - y), 0.5 / r + 1e-12);
            const auto back = parse_quality_prefix(quality_prefix(y, r));
            ASSERT_TRUE(back);
            EXPECT_EQ(*back, q);
        }
    }
}

TEST(Prompt, ApplyToCaptions) {
    auto entries = scored({6.1});
    entries[0].caption = "a dog barks";
    const auto out = apply_prompting(entries, Axis::PQ, 2);
    EXPECT_EQ(*out[0].caption, "Audio quality:6.0 a dog barks");
    EXPECT_TRUE(apply_prompting({}, Axis::PQ, 2).empty());
    EXPECT_THROW(apply_prompting(out, Axis::PQ, 2), Error);
    auto nocap = scored({5});
    nocap[0].caption.reset();
    EXPECT_THROW(apply_prompting(nocap, Axis::PQ, 2), Error);
}

TEST(Prompt, InferencePrefix) {
    std::vector<double> train;
    for (double v : {5.0, 6.0, 7.0, 8.0})
        for (int k = 0; k < 25; ++k) train.push_back(v);
    EXPECT_EQ(inference_prefix(train, 50, 2), "Audio quality:6.5");
    const double p50 = *parse_quality_prefix(inference_prefix(train, 50, 2));
    const double p75 = *parse_quality_prefix(inference_prefix(train, 75, 2));
    const double p90 = *parse_quality_prefix(inference_prefix(train, 90, 2));
    EXPECT_LE(p50, p75);
    EXPECT_LE(p75, p90);
    EXPECT_EQ(p90, 8.0);
}

TEST(PseudoLabel, ScoresSkipsAndFlags) {
    const fs::path dir = fs::temp_directory_path() / "aes_pseudo";
    fs::remove_all(dir);
    fs::create_directories(dir);
    model::EncoderConfig c = model::EncoderConfig::tiny();
    c.frame_size = 400;
    c.frame_stride = 320;
    c.max_frames = 512;
    model::ModelParams p = model::ModelParams::initialize(c, 3);
    p.normalizer.mean = {5, 5, 5, 5};

    std::vector<ManifestEntry> entries;
    std::mt19937 g(1);
    std::uniform_real_distribution<float> u(-0.5f, 0.5f);
    for (int i = 0; i < 10; ++i) {
        audio::AudioClip clip;
        clip.samples.resize(8000);
        for (float& s : clip.samples) s = u(g);
        const std::string name = "p" + std::to_string(i) + ".wav";
        if (i != 7) audio::write_wav(dir / name, clip);
        ManifestEntry e;
        e.audio_path = name;
        entries.push_back(e);
    }
    PseudoLabelOptions o;
    o.batch.base_dir = dir;
    const std::vector<Axis> axes{Axis::PQ, Axis::CE};
    const PseudoLabelResult r = pseudo_label(entries, p, axes, o);
    EXPECT_EQ(r.scored, 9u);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].audio_path, "p7.wav");
    EXPECT_FALSE(r.entries[7].has_score(Axis::PQ));
    for (std::size_t i = 0; i < 10; ++i) {
        if (i == 7) continue;
        const auto direct = inference::sliding_window_predict(audio::load_wav(dir / entries[i].audio_path), p);
        EXPECT_EQ(*r.entries[i].scores[index(Axis::PQ)], direct.scores.pq);
        EXPECT_EQ(*r.entries[i].scores[index(Axis::CE)], direct.scores.ce);
        EXPECT_FALSE(r.entries[i].has_score(Axis::PC));
    }

    const PseudoLabelResult again = pseudo_label(r.entries, p, axes, o);
    EXPECT_EQ(again.skipped, 9u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(again.entries[i], r.entries[i]);
}
