// Exercises the shared library through its C header and the CLI binary.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aes/aes.h"

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun cli(const std::string& args) {
    const std::string cmd = std::string(AES_CLI_PATH) + " " + args + " 2>&1";
    CliRun r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh(const char* name) {
    const fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// Small corpus plus a tiny-preset checkpoint, shared by several tests.
class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fresh("aes_capi_pipeline");
        aes_synth_options so;
        aes_synth_options_init(&so);
        so.count = 24;
        so.seed = 4;
        so.duration_s = 0.5;
        ASSERT_EQ(aes_synth_corpus(dir_.c_str(), &so), AES_OK) << aes_last_error();
        aes_encoder_config enc;
        ASSERT_EQ(aes_encoder_config_preset("tiny", &enc), AES_OK);
        aes_train_options to;
        aes_train_options_init(&to);
        to.steps = 10;
        to.batch_size = 4;
        to.seed = 4;
        char* summary = nullptr;
        ASSERT_EQ(aes_train((dir_ / "manifest.jsonl").c_str(), &enc, &to, nullptr, (dir_ / "ck.aes").c_str(), nullptr,
                            nullptr, nullptr, &summary),
                  AES_OK)
            << aes_last_error();
        aes_string_free(summary);
    }
    static fs::path dir_;
};
fs::path Pipeline::dir_;

}  // namespace

TEST(CApi, StatusAndErrors) {
    EXPECT_STREQ(aes_status_string(AES_OK), "ok");
    EXPECT_NE(std::string(aes_version()), "");
    aes_model* m = nullptr;
    EXPECT_EQ(aes_model_load("/nonexistent/ck.aes", &m), AES_ERR_IO);
    EXPECT_EQ(m, nullptr);
    EXPECT_NE(std::string(aes_last_error()).find("/nonexistent/ck.aes"), std::string::npos);
    EXPECT_EQ(aes_model_load(nullptr, &m), AES_ERR_USAGE);
    aes_encoder_config c;
    EXPECT_EQ(aes_encoder_config_preset("bogus", &c), AES_ERR_USAGE);
}

TEST(CApi, Correlations) {
    const double x[] = {1, 2, 3, 4}, y[] = {1, 3, 2, 4}, k[] = {2, 2, 2, 2};
    double r = 0;
    ASSERT_EQ(aes_pearson(x, y, 4, &r), AES_OK);
    EXPECT_EQ(r, 0.8);
    ASSERT_EQ(aes_spearman(x, y, 4, &r), AES_OK);
    EXPECT_EQ(r, 0.8);
    EXPECT_EQ(aes_pearson(x, k, 4, &r), AES_ERR_DATA);
    const int votes[] = {1, 1, 1, -1, 0};
    aes_pairwise_result p;
    ASSERT_EQ(aes_bootstrap_net_win(votes, 5, 1000, 0, &p), AES_OK);
    EXPECT_EQ(p.net_win_rate, 40.0);
    char* prefix = nullptr;
    ASSERT_EQ(aes_quality_prefix(7.3, 2, &prefix), AES_OK);
    EXPECT_STREQ(prefix, "Audio quality:7.5");
    aes_string_free(prefix);
}

TEST(CApi, GradCheck) {
    aes_encoder_config c;
    aes_encoder_config_preset("tiny", &c);
    aes_gradcheck_result r;
    char* report = nullptr;
    ASSERT_EQ(aes_grad_check(&c, 1, 1e-4, 3, &r, &report), AES_OK) << aes_last_error();
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.checked + r.skipped, r.parameter_count);
    aes_string_free(report);
}

TEST_F(Pipeline, PredictAndEvaluate) {
    aes_model* m = nullptr;
    ASSERT_EQ(aes_model_load((dir_ / "ck.aes").c_str(), &m), AES_OK) << aes_last_error();
    aes_encoder_config c;
    ASSERT_EQ(aes_model_config(m, &c), AES_OK);
    EXPECT_EQ(c.hidden_dim, 16);

    aes_scores a, b;
    size_t windows = 0;
    ASSERT_EQ(aes_model_predict_file(m, (dir_ / "clips/00003.wav").c_str(), &a, &windows), AES_OK);
    EXPECT_GE(windows, 1u);
    std::vector<float> silence(8000, 0.0f);
    EXPECT_EQ(aes_model_predict_samples(m, silence.data(), 0, &b, nullptr), AES_ERR_DATA);

    size_t scored = 0, failed = 0;
    char* failures = nullptr;
    ASSERT_EQ(aes_model_predict_manifest(m, (dir_ / "manifest.jsonl").c_str(), (dir_ / "pred.jsonl").c_str(), 2,
                                         &scored, &failed, &failures),
              AES_OK);
    EXPECT_EQ(scored, 24u);
    EXPECT_EQ(failed, 0u);
    aes_string_free(failures);

    char* text = nullptr;
    ASSERT_EQ(aes_evaluate((dir_ / "pred.jsonl").c_str(), (dir_ / "manifest.jsonl").c_str(), 1, 1, nullptr,
                           (dir_ / "eval.csv").c_str(), &text),
              AES_OK)
        << aes_last_error();
    EXPECT_NE(std::string(text).find("utt-PCC"), std::string::npos);
    aes_string_free(text);
    aes_model_free(m);
}

TEST_F(Pipeline, CurateThroughCApi) {
    char* report = nullptr;
    ASSERT_EQ(aes_curate_filter((dir_ / "manifest.jsonl").c_str(), (dir_ / "f.jsonl").c_str(), "pq", 50, &report),
              AES_OK);
    aes_string_free(report);
    std::ifstream in(dir_ / "f.jsonl");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 12u);
    char* prefix = nullptr;
    ASSERT_EQ(aes_inference_prefix((dir_ / "manifest.jsonl").c_str(), "PQ", 90, 2, &prefix), AES_OK);
    EXPECT_EQ(std::string(prefix).rfind("Audio quality:", 0), 0u);
    aes_string_free(prefix);
    EXPECT_EQ(aes_curate_filter((dir_ / "manifest.jsonl").c_str(), (dir_ / "g.jsonl").c_str(), "loudness", 50, nullptr),
              AES_ERR_USAGE);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli("").code, 1);
    EXPECT_EQ(cli("train --no-such-flag").code, 1);
    EXPECT_EQ(cli("eval --pred /nonexistent.jsonl --labels /nonexistent.jsonl").code, 2);
    const fs::path d = fresh("aes_cli_codes");
    std::ofstream(d / "bad.jsonl") << "{broken\n";
    EXPECT_EQ(cli("curate filter --manifest " + (d / "bad.jsonl").string() + " --out " + (d / "o.jsonl").string()).code, 2);
    EXPECT_EQ(cli("grad-check --seed 2").code, 0);
}

TEST(Cli, HelpListsFlags) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> expected{
        {"synth", {"--count", "--seed", "--out"}},
        {"train", {"--manifest", "--steps", "--seed", "--out", "--batch", "--lr", "--resume", "--jobs"}},
        {"predict", {"--checkpoint", "--input", "--manifest", "--out", "--jobs"}},
        {"eval", {"--pred", "--labels", "--per-system", "--axis-matrix"}},
        {"curate filter", {"--manifest", "--axis", "--percentile"}},
        {"curate prompt", {"--axis", "--rounding", "--inference", "--percentile"}},
        {"qualify", {"--rater", "--golden", "--threshold"}},
        {"grad-check", {"--seed", "--tolerance"}},
        {"pairwise", {"--votes", "--resamples", "--seed"}},
    };
    for (const auto& [cmd, flags] : expected) {
        const CliRun r = cli(cmd + " --help");
        EXPECT_EQ(r.code, 0) << cmd;
        for (const auto& f : flags) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
    }
    EXPECT_NE(cli("qualify --help").out.find("0.7"), std::string::npos);
    EXPECT_NE(cli("pairwise --help").out.find("1000"), std::string::npos);
}

TEST_F(Pipeline, CliEvalMatchesLibraryAndPredictPrintsScores) {
    const CliRun p = cli("predict --checkpoint " + (dir_ / "ck.aes").string() + " --input " + (dir_ / "clips/00000.wav").string());
    ASSERT_EQ(p.code, 0) << p.out;
    for (const char* axis : {"PQ ", "PC ", "CE ", "CU "}) EXPECT_NE(p.out.find(axis), std::string::npos);
    EXPECT_EQ(std::count(p.out.begin(), p.out.end(), '\n'), 1);

    const CliRun m = cli("predict --checkpoint " + (dir_ / "ck.aes").string() + " --manifest " +
                      (dir_ / "manifest.jsonl").string() + " --out " + (dir_ / "cli_pred.jsonl").string());
    ASSERT_EQ(m.code, 0) << m.out;
    const CliRun e = cli("eval --pred " + (dir_ / "cli_pred.jsonl").string() + " --labels " +
                      (dir_ / "manifest.jsonl").string() + " --per-system --csv " + (dir_ / "cli_eval.csv").string());
    ASSERT_EQ(e.code, 0) << e.out;
    char* text = nullptr;
    ASSERT_EQ(aes_evaluate((dir_ / "cli_pred.jsonl").c_str(), (dir_ / "manifest.jsonl").c_str(), 1, 0, nullptr,
                           (dir_ / "lib_eval.csv").c_str(), &text),
              AES_OK);
    EXPECT_EQ(e.out, std::string(text));
    EXPECT_EQ(slurp(dir_ / "cli_eval.csv"), slurp(dir_ / "lib_eval.csv"));
    aes_string_free(text);
}

TEST_F(Pipeline, ConfigFileSetsFlagsAndCommandLineWins) {
    std::ofstream(dir_ / "cfg.toml") << "[pairwise]\nresamples = 17\nseed = 3\n";
    const fs::path votes = dir_ / "v.jsonl";
    std::ofstream(votes) << "1\n0\n-1\n1\n";
    const CliRun a = cli("--config " + (dir_ / "cfg.toml").string() + " pairwise --votes " + votes.string());
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_NE(a.out.find("resamples 17"), std::string::npos) << a.out;
    const CliRun b = cli("--config " + (dir_ / "cfg.toml").string() + " pairwise --votes " + votes.string() + " --resamples 5");
    EXPECT_NE(b.out.find("resamples 5"), std::string::npos) << b.out;
}

TEST_F(Pipeline, TrainTwiceIsByteIdentical) {
    const std::string base = "train --manifest " + (dir_ / "manifest.jsonl").string() +
                             " --preset tiny --steps 6 --batch 4 --seed 9 --log-every 0";
    ASSERT_EQ(cli(base + " --out " + (dir_ / "t1.aes").string() + " --log " + (dir_ / "t1.csv").string()).code, 0);
    ASSERT_EQ(cli(base + " --out " + (dir_ / "t2.aes").string() + " --log " + (dir_ / "t2.csv").string()).code, 0);
    EXPECT_EQ(slurp(dir_ / "t1.aes"), slurp(dir_ / "t2.aes"));
    EXPECT_EQ(slurp(dir_ / "t1.csv"), slurp(dir_ / "t2.csv"));
}
