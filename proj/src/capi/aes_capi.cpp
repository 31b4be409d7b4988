#include "aes/aes.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>
#include <unordered_map>

#include "aes/audio_io.hpp"
#include "aes/checkpoint.hpp"
#include "aes/curation.hpp"
#include "aes/error.hpp"
#include "aes/fileio.hpp"
#include "aes/inference.hpp"
#include "aes/manifest.hpp"
#include "aes/metrics.hpp"
#include "aes/synthdata.hpp"
#include "aes/training.hpp"

struct aes_model {
    aes::model::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

aes_status status_of(aes::ErrorKind kind) {
    switch (kind) {
        case aes::ErrorKind::Usage: return AES_ERR_USAGE;
        case aes::ErrorKind::Io: return AES_ERR_IO;
        case aes::ErrorKind::UnsupportedCodec: return AES_ERR_UNSUPPORTED_CODEC;
        case aes::ErrorKind::Truncated: return AES_ERR_TRUNCATED;
        case aes::ErrorKind::Format: return AES_ERR_FORMAT;
        case aes::ErrorKind::Data: return AES_ERR_DATA;
        case aes::ErrorKind::Numerical: return AES_ERR_NUMERICAL;
    }
    return AES_ERR_INTERNAL;
}

template <class F>
aes_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return AES_OK;
    } catch (const aes::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return AES_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return AES_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) aes::fail(aes::ErrorKind::Usage, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_string(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

aes::Axis axis_arg(const char* text) {
    require(text, "axis");
    auto axis = aes::parse_axis(text);
    if (!axis) aes::fail(aes::ErrorKind::Usage, std::string("unknown axis '") + text + "' (expected PQ, PC, CE or CU)");
    return *axis;
}

aes_scores to_c(const aes::AesScores& s) { return {s.pq, s.pc, s.ce, s.cu}; }

aes::model::EncoderConfig from_c(const aes_encoder_config& c) {
    aes::model::EncoderConfig e;
    e.num_layers = c.num_layers;
    e.hidden_dim = c.hidden_dim;
    e.num_heads = c.num_heads;
    e.ffn_dim = c.ffn_dim;
    e.frame_size = c.frame_size;
    e.frame_stride = c.frame_stride;
    e.max_frames = c.max_frames;
    e.head_blocks = c.head_blocks;
    e.positional_encoding = c.positional_encoding != 0;
    e.validate();
    return e;
}

aes_encoder_config to_c(const aes::model::EncoderConfig& e) {
    return {e.num_layers, e.hidden_dim, e.num_heads, e.ffn_dim, e.frame_size,
            e.frame_stride, e.max_frames, e.head_blocks, e.positional_encoding ? 1 : 0};
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

extern "C" {

const char* aes_status_string(aes_status status) {
    switch (status) {
        case AES_OK: return "ok";
        case AES_ERR_USAGE: return "usage error";
        case AES_ERR_IO: return "i/o error";
        case AES_ERR_UNSUPPORTED_CODEC: return "unsupported codec";
        case AES_ERR_TRUNCATED: return "truncated data";
        case AES_ERR_FORMAT: return "format error";
        case AES_ERR_DATA: return "data error";
        case AES_ERR_NUMERICAL: return "numerical failure";
        case AES_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* aes_last_error(void) { return g_last_error.c_str(); }

void aes_string_free(char* s) { std::free(s); }

const char* aes_version(void) { return "1.0.0"; }

aes_status aes_encoder_config_preset(const char* name, aes_encoder_config* out) {
    return guarded([&] {
        require(out, "out");
        const std::string n = name ? name : "desk";
        aes::model::EncoderConfig e;
        if (n == "desk") e = aes::model::EncoderConfig::desk();
        else if (n == "tiny") e = aes::model::EncoderConfig::tiny();
        else if (n == "base") e = aes::model::EncoderConfig::base();
        else aes::fail(aes::ErrorKind::Usage, "unknown preset '" + n + "' (expected desk, tiny or base)");
        *out = to_c(e);
    });
}

// ---------------------------------------------------------------------------

aes_status aes_model_load(const char* checkpoint_path, aes_model** out) {
    return guarded([&] {
        require(checkpoint_path, "checkpoint_path");
        require(out, "out");
        *out = nullptr;
        auto ckpt = aes::model::load_checkpoint(checkpoint_path);
        *out = new aes_model{std::move(ckpt.params)};
    });
}

void aes_model_free(aes_model* model) { delete model; }

aes_status aes_model_config(const aes_model* model, aes_encoder_config* out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = to_c(model->params.config);
    });
}

aes_status aes_model_predict_samples(const aes_model* model, const float* samples, size_t count, aes_scores* out,
                                     size_t* window_count) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        if (count > 0) require(samples, "samples");
        aes::audio::AudioClip clip;
        clip.samples.assign(samples, samples + count);
        const auto pred = aes::inference::sliding_window_predict(clip, model->params);
        *out = to_c(pred.scores);
        if (window_count) *window_count = pred.window_count();
    });
}

aes_status aes_model_predict_file(const aes_model* model, const char* wav_path, aes_scores* out, size_t* window_count) {
    return guarded([&] {
        require(model, "model");
        require(wav_path, "wav_path");
        require(out, "out");
        const auto pred = aes::inference::sliding_window_predict(aes::audio::load_wav(wav_path), model->params);
        *out = to_c(pred.scores);
        if (window_count) *window_count = pred.window_count();
    });
}

aes_status aes_model_predict_manifest(const aes_model* model, const char* manifest_path, const char* out_path, int jobs,
                                      size_t* scored, size_t* failed, char** failures) {
    return guarded([&] {
        require(model, "model");
        require(manifest_path, "manifest_path");
        require(out_path, "out_path");
        const std::filesystem::path mpath(manifest_path);
        const auto entries = aes::read_manifest(mpath);
        aes::inference::BatchOptions opts;
        opts.jobs = jobs;
        opts.base_dir = mpath.parent_path();
        const auto results = aes::inference::batch_predict(entries, model->params, opts);
        aes::write_manifest(out_path, aes::inference::prediction_records(entries, results));
        std::string report;
        std::size_t n_failed = 0;
        for (const auto& r : results) {
            if (r.ok()) continue;
            ++n_failed;
            report += r.audio_path + ": " + r.error + "\n";
        }
        if (scored) *scored = results.size() - n_failed;
        if (failed) *failed = n_failed;
        set_string(failures, report);
    });
}

// ---------------------------------------------------------------------------

void aes_synth_options_init(aes_synth_options* options) {
    if (!options) return;
    const aes::synth::CorpusOptions d;
    *options = {100, 0, d.duration_s, d.severity_buckets, 1};
}

aes_status aes_synth_corpus(const char* out_dir, const aes_synth_options* options) {
    return guarded([&] {
        require(out_dir, "out_dir");
        require(options, "options");
        aes::synth::CorpusOptions o;
        o.duration_s = options->duration_s;
        o.severity_buckets = options->severity_buckets;
        o.jobs = options->jobs;
        aes::synth::build_corpus(options->count, options->seed, out_dir, o);
    });
}

// ---------------------------------------------------------------------------

void aes_train_options_init(aes_train_options* options) {
    if (!options) return;
    const aes::training::TrainConfig d;
    *options = {d.learning_rate, d.beta1, d.beta2, d.epsilon, d.batch_size, d.steps, d.warmup_steps, d.decay ? 1 : 0,
                d.seed, d.chunk_seconds, d.clip_norm, AES_AXIS_ALL, d.jobs, 0};
}

aes_status aes_train(const char* manifest_path, const aes_encoder_config* encoder, const aes_train_options* options,
                     const char* resume_path, const char* checkpoint_out, const char* log_csv,
                     aes_train_progress progress, void* user, char** summary) {
    aes::training::TrainResult result;
    bool have_result = false;
    const aes_status st = guarded([&] {
        require(manifest_path, "manifest_path");
        require(options, "options");
        require(checkpoint_out, "checkpoint_out");

        aes::training::TrainConfig cfg;
        cfg.learning_rate = options->learning_rate;
        cfg.beta1 = options->beta1;
        cfg.beta2 = options->beta2;
        cfg.epsilon = options->epsilon;
        cfg.batch_size = options->batch_size;
        cfg.steps = options->steps;
        cfg.warmup_steps = options->warmup_steps;
        cfg.decay = options->decay != 0;
        cfg.seed = options->seed;
        cfg.chunk_seconds = options->chunk_seconds;
        cfg.clip_norm = options->clip_norm;
        cfg.jobs = options->jobs;
        for (aes::Axis a : aes::kAllAxes) cfg.axes[aes::index(a)] = (options->axes >> aes::index(a)) & 1u;
        if (options->stop_after > 0) cfg.stop_after = options->stop_after;

        std::optional<aes::model::Checkpoint> resume;
        aes::model::EncoderConfig enc;
        if (resume_path) {
            resume = aes::model::load_checkpoint(resume_path);
            enc = resume->params.config;
        } else {
            enc = encoder ? from_c(*encoder) : aes::model::EncoderConfig::desk();
        }

        const std::filesystem::path mpath(manifest_path);
        const auto entries = aes::read_manifest(mpath);
        const auto corpus = aes::training::load_training_clips(entries, mpath.parent_path());

        aes::training::StepCallback cb;
        if (progress)
            cb = [&](const aes::training::TrainLogRow& row) { progress(row.step, row.loss, row.learning_rate, user); };
        result = aes::training::train_run(corpus, cfg, enc, resume ? &*resume : nullptr, cb);
        have_result = true;

        aes::model::save_checkpoint(checkpoint_out, result.params, &result.optimizer);
        if (log_csv) aes::write_file_atomic(log_csv, aes::training::format_train_log(result.log));

        std::string text = "clips " + std::to_string(corpus.size()) + "\nparameters " +
                           std::to_string(result.params.weights.size()) + "\nsteps " +
                           std::to_string(result.optimizer.step) + "\n";
        if (!result.log.empty()) {
            text += "first_loss " + fmt("%.6f", result.log.front().loss) + "\n";
            text += "last_loss " + fmt("%.6f", result.log.back().loss) + "\n";
        }
        if (result.aborted) text += "aborted " + *result.aborted + "\n";
        set_string(summary, text);
    });
    if (st == AES_OK && have_result && result.aborted) {
        g_last_error = *result.aborted;
        return AES_ERR_NUMERICAL;
    }
    return st;
}

aes_status aes_grad_check(const aes_encoder_config* encoder, uint64_t seed, double tolerance, size_t batch_size,
                          aes_gradcheck_result* out, char** report) {
    return guarded([&] {
        require(out, "out");
        const auto enc = encoder ? from_c(*encoder) : aes::model::EncoderConfig::tiny();
        aes::training::GradCheckOptions opts;
        if (batch_size > 0) opts.batch_size = batch_size;
        const auto r = aes::training::grad_check(enc, seed, tolerance, opts);
        *out = {r.parameter_count, r.checked, r.skipped.size(), r.failing.size(), r.max_relative_error, r.seconds,
                r.passed ? 1 : 0};
        std::string text = "worst " + r.worst_coordinate + " " + fmt("%.3e", r.max_relative_error) + "\n";
        for (const auto& f : r.failing) text += "failing " + f + "\n";
        for (const auto& s : r.skipped) text += "skipped " + s + "\n";
        set_string(report, text);
    });
}

// ---------------------------------------------------------------------------

aes_status aes_evaluate(const char* pred_path, const char* label_path, int per_system, int axis_matrix,
                        const char* report_path, const char* csv_path, char** report_text) {
    return guarded([&] {
        require(pred_path, "pred_path");
        require(label_path, "label_path");
        const auto preds = aes::read_manifest(pred_path);
        const auto labels = aes::read_manifest(label_path);
        aes::metrics::EvalOptions opts;
        opts.per_system = per_system != 0;
        opts.axis_matrix = axis_matrix != 0;
        const auto report = aes::metrics::evaluate(preds, labels, opts);
        const std::string text = aes::metrics::format_eval_report(report);
        if (report_path) aes::write_file_atomic(report_path, text);
        if (csv_path) aes::write_file_atomic(csv_path, aes::metrics::format_eval_csv(report));
        set_string(report_text, text);
    });
}

aes_status aes_evaluate_score_file(const char* score_path, const char* label_path, const char* axis, double* utt_pcc,
                                   size_t* matched) {
    return guarded([&] {
        require(score_path, "score_path");
        require(label_path, "label_path");
        require(utt_pcc, "utt_pcc");
        const aes::Axis ax = axis_arg(axis);
        const auto scores = aes::metrics::read_score_file(score_path);
        const auto labels = aes::read_manifest(label_path);
        std::unordered_map<std::string, double> truth;
        for (const auto& l : labels)
            if (l.has_score(ax)) truth.emplace(l.audio_path, *l.scores[aes::index(ax)]);
        std::vector<double> x, y;
        for (const auto& [path, s] : scores) {
            auto it = truth.find(path);
            if (it == truth.end()) continue;
            x.push_back(s);
            y.push_back(it->second);
        }
        *utt_pcc = aes::metrics::pearson(x, y);
        if (matched) *matched = x.size();
    });
}

aes_status aes_pearson(const double* x, const double* y, size_t n, double* out) {
    return guarded([&] {
        require(x, "x");
        require(y, "y");
        require(out, "out");
        *out = aes::metrics::pearson({x, n}, {y, n});
    });
}

aes_status aes_spearman(const double* x, const double* y, size_t n, double* out) {
    return guarded([&] {
        require(x, "x");
        require(y, "y");
        require(out, "out");
        *out = aes::metrics::spearman({x, n}, {y, n});
    });
}

aes_status aes_qualify(const char* rater_path, const char* golden_path, double threshold, aes_qualify_result* out,
                       char** reason) {
    return guarded([&] {
        require(rater_path, "rater_path");
        require(golden_path, "golden_path");
        require(out, "out");
        const auto d = aes::metrics::qualify_records(aes::read_manifest(rater_path), aes::read_manifest(golden_path),
                                                     threshold);
        *out = {d.pass ? 1 : 0, d.pq.pass ? 1 : 0, d.pc.pass ? 1 : 0, d.pq.r, d.pc.r};
        std::string text;
        if (!d.pq.pass) text += "PQ: " + d.pq.reason + "\n";
        if (!d.pc.pass) text += "PC: " + d.pc.reason + "\n";
        set_string(reason, text);
    });
}

aes_status aes_bootstrap_net_win(const int* votes, size_t count, size_t resamples, uint64_t seed,
                                 aes_pairwise_result* out) {
    return guarded([&] {
        require(out, "out");
        if (count > 0) require(votes, "votes");
        const auto r = aes::metrics::bootstrap_net_win({votes, count}, resamples, seed);
        *out = {r.net_win_rate, r.ci_low, r.ci_high, r.n_pairs, r.n_resamples};
    });
}

aes_status aes_pairwise_file(const char* votes_path, size_t resamples, uint64_t seed, aes_pairwise_result* out) {
    return guarded([&] {
        require(votes_path, "votes_path");
        require(out, "out");
        const auto votes = aes::metrics::read_votes(votes_path);
        const auto r = aes::metrics::bootstrap_net_win(votes, resamples, seed);
        *out = {r.net_win_rate, r.ci_low, r.ci_high, r.n_pairs, r.n_resamples};
    });
}

// ---------------------------------------------------------------------------

aes_status aes_curate_filter(const char* in_path, const char* out_path, const char* axis, double percentile,
                             char** report) {
    return guarded([&] {
        require(in_path, "in_path");
        require(out_path, "out_path");
        const auto result = aes::curation::filter_manifest(aes::read_manifest(in_path), axis_arg(axis), percentile);
        aes::write_manifest(out_path, result.kept);
        set_string(report, aes::curation::format_filter_report(result.report));
    });
}

aes_status aes_curate_prompt(const char* in_path, const char* out_path, const char* axis, int rounding, char** report) {
    return guarded([&] {
        require(in_path, "in_path");
        require(out_path, "out_path");
        const auto entries = aes::read_manifest(in_path);
        const auto prompted = aes::curation::apply_prompting(entries, axis_arg(axis), rounding);
        aes::write_manifest(out_path, prompted);
        set_string(report, "prompted " + std::to_string(prompted.size()) + "\n");
    });
}

aes_status aes_inference_prefix(const char* training_manifest, const char* axis, double percentile, int rounding,
                                char** prefix) {
    return guarded([&] {
        require(training_manifest, "training_manifest");
        require(prefix, "prefix");
        const aes::Axis ax = axis_arg(axis);
        std::vector<double> values;
        for (const auto& e : aes::read_manifest(training_manifest)) {
            if (!e.has_score(ax))
                aes::fail(aes::ErrorKind::Data, "record '" + e.audio_path + "' has no " +
                                                    std::string(aes::axis_name(ax)) + " score");
            values.push_back(*e.scores[aes::index(ax)]);
        }
        set_string(prefix, aes::curation::inference_prefix(values, percentile, rounding));
    });
}

aes_status aes_quality_prefix(double score, int rounding, char** prefix) {
    return guarded([&] {
        require(prefix, "prefix");
        set_string(prefix, aes::curation::quality_prefix(score, rounding));
    });
}

aes_status aes_pseudo_label(const aes_model* model, const char* in_path, const char* out_path, const char* axes,
                            int overwrite, int jobs, char** report) {
    return guarded([&] {
        require(model, "model");
        require(in_path, "in_path");
        require(out_path, "out_path");
        std::vector<aes::Axis> list;
        std::stringstream ss(axes ? axes : "PQ");
        std::string item;
        while (std::getline(ss, item, ',')) list.push_back(axis_arg(item.c_str()));
        const std::filesystem::path ipath(in_path);
        aes::curation::PseudoLabelOptions opts;
        opts.overwrite = overwrite != 0;
        opts.batch.jobs = jobs;
        opts.batch.base_dir = ipath.parent_path();
        const auto r = aes::curation::pseudo_label(aes::read_manifest(ipath), model->params, list, opts);
        aes::write_manifest(out_path, r.entries);
        std::string text = "scored " + std::to_string(r.scored) + "\nskipped " + std::to_string(r.skipped) +
                           "\nfailed " + std::to_string(r.failures.size()) + "\n";
        for (const auto& f : r.failures) text += "  " + f.audio_path + ": " + f.error + "\n";
        set_string(report, text);
    });
}

}  // extern "C"
