#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "aes/error.hpp"
#include "aes/fileio.hpp"
#include "aes/manifest.hpp"
#include "aes/scores.hpp"

namespace fs = std::filesystem;
using namespace aes;

TEST(Scores, AxisNamesAndIndexing) {
    EXPECT_EQ(axis_name(Axis::CE), "CE");
    EXPECT_EQ(axis_key(Axis::CU), "cu");
    EXPECT_EQ(parse_axis("pc"), Axis::PC);
    EXPECT_EQ(parse_axis("PQ"), Axis::PQ);
    EXPECT_FALSE(parse_axis("xx"));
    AesScores s{1, 2, 3, 4};
    s[Axis::CE] = 9;
    EXPECT_EQ(s.ce, 9);
    EXPECT_FALSE((AesScores{0.5, 2, 3, 4}).in_label_range());
}

TEST(Manifest, RoundTripKeepsExtraFields) {
    const std::string line =
        R"({"schema_version":1,"audio_path":"a/b.wav","caption":"rain","pq":7.25,"pc":3,"system_id":"s1","modality":"sound","severity":0.5,"tags":["x"]})";
    const ManifestEntry e = parse_manifest_record(line);
    EXPECT_EQ(e.audio_path, "a/b.wav");
    EXPECT_EQ(*e.caption, "rain");
    EXPECT_EQ(*e.scores[0], 7.25);
    EXPECT_FALSE(e.has_score(Axis::CE));
    EXPECT_EQ(e.extra_field("severity"), "0.5");
    EXPECT_EQ(e.extra_field("tags"), R"(["x"])");
    EXPECT_EQ(parse_manifest_record(format_manifest_record(e)), e);
    EXPECT_EQ(format_manifest_record(e).rfind(R"({"schema_version":1,)", 0), 0u);
}

TEST(Manifest, Errors) {
    auto kind_of = [](const std::string& text) {
        try {
            parse_manifest(text, "m.jsonl");
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Usage;
    };
    EXPECT_EQ(kind_of("{not json\n"), ErrorKind::Format);
    EXPECT_EQ(kind_of(R"({"pq":3})"), ErrorKind::Data);
    EXPECT_EQ(kind_of(R"({"audio_path":"x","schema_version":2})"), ErrorKind::Format);
    EXPECT_EQ(kind_of(R"({"audio_path":"x","pq":"high"})"), ErrorKind::Format);
    try {
        parse_manifest("{\"audio_path\":\"a\"}\n\n{oops}\n", "m.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("m.jsonl:3"), std::string::npos);
    }
}

TEST(Manifest, FileRoundTripAndPathResolution) {
    const fs::path dir = fs::temp_directory_path() / "aes_manifest_io";
    fs::create_directories(dir);
    ManifestEntry a;
    a.audio_path = "clips/1.wav";
    a.set_scores({1, 2, 3, 4});
    ManifestEntry b;
    b.audio_path = "/abs/2.wav";
    write_manifest(dir / "m.jsonl", {a, b});
    const auto back = read_manifest(dir / "m.jsonl");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], a);
    EXPECT_EQ(resolve_audio_path(dir / "m.jsonl", back[0]), dir / "clips/1.wav");
    EXPECT_EQ(resolve_audio_path(dir / "m.jsonl", back[1]), fs::path("/abs/2.wav"));
    EXPECT_THROW(back[1].require_scores(), Error);
}

TEST(FileIo, AtomicWriteAndMissingRead) {
    const fs::path dir = fs::temp_directory_path() / "aes_fileio";
    fs::create_directories(dir);
    write_file_atomic(dir / "x.txt", "hello");
    EXPECT_EQ(read_file(dir / "x.txt"), "hello");
    try {
        read_file(dir / "nope.txt");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}
