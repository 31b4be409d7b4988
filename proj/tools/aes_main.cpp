// aes: command-line front end over the libaes C API.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aes/aes.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

int exit_code(aes_status st) {
    switch (st) {
        case AES_OK: return kOk;
        case AES_ERR_USAGE: return kUsage;
        case AES_ERR_NUMERICAL: return kNumerical;
        default: return kData;
    }
}

int report_failure(const char* what, aes_status st) {
    std::fprintf(stderr, "aes %s: %s: %s\n", what, aes_status_string(st), aes_last_error());
    return exit_code(st);
}

struct CString {
    char* p = nullptr;
    ~CString() { aes_string_free(p); }
    const char* c_str() const { return p ? p : ""; }
};

struct ModelHandle {
    aes_model* p = nullptr;
    ~ModelHandle() { aes_model_free(p); }
};

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void print_scores(const std::string& label, const aes_scores& s, size_t windows) {
    std::printf("%s PQ %.6f PC %.6f CE %.6f CU %.6f windows %zu\n", label.c_str(), s.pq, s.pc, s.ce, s.cu, windows);
}

unsigned parse_axes_mask(const std::string& text) {
    unsigned mask = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        std::string item = text.substr(pos, end - pos);
        for (char& c : item) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (item == "PQ") mask |= AES_AXIS_PQ;
        else if (item == "PC") mask |= AES_AXIS_PC;
        else if (item == "CE") mask |= AES_AXIS_CE;
        else if (item == "CU") mask |= AES_AXIS_CU;
        else throw CLI::ValidationError("--axes", "unknown axis '" + item + "'");
        pos = end + 1;
    }
    return mask;
}

// Encoder flags shared by train and grad-check. Zero means "take the preset".
struct EncoderFlags {
    std::string preset;
    int layers = 0, hidden = 0, heads = 0, ffn = 0, frame_size = 0, frame_stride = 0, max_frames = 0,
        head_blocks = -1;
    bool no_positional = false;

    void add(CLI::App* app, const std::string& default_preset) {
        preset = default_preset;
        app->add_option("--preset", preset, "Encoder preset: desk, tiny or base")
            ->capture_default_str()
            ->check(CLI::IsMember({"desk", "tiny", "base"}));
        app->add_option("--layers", layers, "Transformer layers (overrides preset)");
        app->add_option("--hidden", hidden, "Hidden dimension (overrides preset)");
        app->add_option("--heads", heads, "Attention heads (overrides preset)");
        app->add_option("--ffn", ffn, "Feed-forward dimension (overrides preset)");
        app->add_option("--frame-size", frame_size, "Samples per frontend frame (overrides preset)");
        app->add_option("--frame-stride", frame_stride, "Frontend frame stride (overrides preset)");
        app->add_option("--max-frames", max_frames, "Maximum frames per window (overrides preset)");
        app->add_option("--head-blocks", head_blocks, "MLP blocks before the output layer (overrides preset)");
        app->add_flag("--no-positional-encoding", no_positional, "Disable sinusoidal positional encodings");
    }

    aes_status resolve(aes_encoder_config* out) const {
        aes_status st = aes_encoder_config_preset(preset.c_str(), out);
        if (st != AES_OK) return st;
        if (layers) out->num_layers = layers;
        if (hidden) out->hidden_dim = hidden;
        if (heads) out->num_heads = heads;
        if (ffn) out->ffn_dim = ffn;
        if (frame_size) out->frame_size = frame_size;
        if (frame_stride) out->frame_stride = frame_stride;
        if (max_frames) out->max_frames = max_frames;
        if (head_blocks >= 0) out->head_blocks = head_blocks;
        if (no_positional) out->positional_encoding = 0;
        return AES_OK;
    }
};

void on_train_step(int64_t step, double loss, double lr, void* user) {
    const int every = *static_cast<const int*>(user);
    if (every > 0 && step % every == 0) std::printf("step %lld loss %.6f lr %.3g\n", static_cast<long long>(step), loss, lr);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audio aesthetics scoring: synthetic data, training, prediction, evaluation and curation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML/INI file setting any flag; [section] names match subcommands");
    app.set_version_flag("--version", std::string(aes_version()));

    int status = kOk;

    // synth ------------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
    aes_synth_options so;
    aes_synth_options_init(&so);
    std::string synth_out;
    synth->add_option("--count", so.count, "Number of clips")->capture_default_str();
    synth->add_option("--seed", so.seed, "Random seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--duration", so.duration_s, "Clip duration in seconds")->capture_default_str();
    synth->add_option("--buckets", so.severity_buckets, "Severity buckets (system ids)")->capture_default_str();
    synth->add_option("--jobs", so.jobs, "Worker threads")->capture_default_str();
    synth->callback([&] {
        const aes_status st = aes_synth_corpus(synth_out.c_str(), &so);
        if (st != AES_OK) {
            status = report_failure("synth", st);
            return;
        }
        std::printf("wrote %zu clips and %s/manifest.jsonl\n", so.count, synth_out.c_str());
    });

    // train ------------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train a predictor on a labeled manifest");
    aes_train_options to;
    aes_train_options_init(&to);
    EncoderFlags train_enc;
    std::string train_manifest, train_out, train_log, train_resume, train_axes = "PQ,PC,CE,CU";
    bool no_decay = false;
    int log_every = 100;
    train->add_option("--manifest", train_manifest, "Training manifest (JSON Lines)")->required();
    train->add_option("--out", train_out, "Checkpoint to write")->required();
    train->add_option("--log", train_log, "Per-step CSV log");
    train->add_option("--resume", train_resume, "Continue from this checkpoint");
    train->add_option("--steps", to.steps, "Optimizer steps")->capture_default_str();
    train->add_option("--stop-after", to.stop_after, "Stop after this step (schedule still spans --steps)");
    train->add_option("--batch", to.batch_size, "Clips per step")->capture_default_str();
    train->add_option("--lr", to.learning_rate, "Peak learning rate")->capture_default_str();
    train->add_option("--warmup", to.warmup_steps, "Linear warmup steps")->capture_default_str();
    train->add_flag("--no-decay", no_decay, "Keep the learning rate constant after warmup");
    train->add_option("--beta1", to.beta1, "Adam beta1")->capture_default_str();
    train->add_option("--beta2", to.beta2, "Adam beta2")->capture_default_str();
    train->add_option("--eps", to.epsilon, "Adam epsilon")->capture_default_str();
    train->add_option("--chunk-seconds", to.chunk_seconds, "Random crop length for long clips")->capture_default_str();
    train->add_option("--clip-norm", to.clip_norm, "Global gradient-norm clip (<= 0 disables)")->capture_default_str();
    train->add_option("--axes", train_axes, "Axes in the loss, comma separated")->capture_default_str();
    train->add_option("--seed", to.seed, "Random seed")->capture_default_str();
    train->add_option("--jobs", to.jobs, "Worker threads per batch")->capture_default_str();
    train->add_option("--log-every", log_every, "Print progress every N steps (0: quiet)")->capture_default_str();
    train_enc.add(train, "desk");
    train->callback([&] {
        to.decay = no_decay ? 0 : 1;
        to.axes = parse_axes_mask(train_axes);
        aes_encoder_config enc;
        aes_status st = train_enc.resolve(&enc);
        if (st != AES_OK) {
            status = report_failure("train", st);
            return;
        }
        CString summary;
        st = aes_train(train_manifest.c_str(), &enc, &to, opt(train_resume), train_out.c_str(), opt(train_log),
                       &on_train_step, &log_every, &summary.p);
        std::fputs(summary.c_str(), stdout);
        if (st != AES_OK) {
            status = report_failure("train", st);
            return;
        }
        std::printf("checkpoint %s\n", train_out.c_str());
    });

    // predict ----------------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "Score a WAV file or every record of a manifest");
    std::string pred_ckpt, pred_input, pred_manifest, pred_out;
    int pred_jobs = 1;
    predict->add_option("--checkpoint", pred_ckpt, "Model checkpoint")->required();
    auto* in_opt = predict->add_option("--input", pred_input, "WAV file to score");
    auto* man_opt = predict->add_option("--manifest", pred_manifest, "Manifest to score (requires --out)");
    in_opt->excludes(man_opt);
    predict->add_option("--out", pred_out, "Prediction manifest to write");
    predict->add_option("--jobs", pred_jobs, "Worker threads")->capture_default_str();
    predict->callback([&] {
        if (pred_input.empty() == pred_manifest.empty())
            throw CLI::ValidationError("predict", "give exactly one of --input or --manifest");
        if (!pred_manifest.empty() && pred_out.empty()) throw CLI::ValidationError("predict", "--manifest needs --out");
        ModelHandle model;
        aes_status st = aes_model_load(pred_ckpt.c_str(), &model.p);
        if (st != AES_OK) {
            status = report_failure("predict", st);
            return;
        }
        if (!pred_input.empty()) {
            aes_scores s{};
            size_t windows = 0;
            st = aes_model_predict_file(model.p, pred_input.c_str(), &s, &windows);
            if (st != AES_OK) {
                status = report_failure("predict", st);
                return;
            }
            print_scores(pred_input, s, windows);
            return;
        }
        size_t scored = 0, failed = 0;
        CString failures;
        st = aes_model_predict_manifest(model.p, pred_manifest.c_str(), pred_out.c_str(), pred_jobs, &scored, &failed,
                                        &failures.p);
        if (st != AES_OK) {
            status = report_failure("predict", st);
            return;
        }
        std::fputs(failures.c_str(), stderr);
        std::printf("scored %zu failed %zu -> %s\n", scored, failed, pred_out.c_str());
        if (failed > 0) status = kData;
    });

    // eval -------------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Correlate predictions with labels");
    std::string eval_pred, eval_labels, eval_report, eval_csv, eval_scores, eval_axis = "PQ";
    bool per_system = false, axis_matrix = false;
    eval->add_option("--pred", eval_pred, "Prediction manifest");
    eval->add_option("--labels", eval_labels, "Label manifest")->required();
    eval->add_flag("--per-system", per_system, "Add system-level SRCC (needs system_id)");
    eval->add_flag("--axis-matrix", axis_matrix, "Add 4x4 axis correlation matrices");
    eval->add_option("--report", eval_report, "Write the text report here");
    eval->add_option("--csv", eval_csv, "Write metric,axis,value rows here");
    eval->add_option("--scores", eval_scores, "Third-party 'path score' file instead of --pred");
    eval->add_option("--axis", eval_axis, "Label axis for --scores")->capture_default_str();
    eval->callback([&] {
        if (eval_pred.empty() == eval_scores.empty())
            throw CLI::ValidationError("eval", "give exactly one of --pred or --scores");
        if (!eval_scores.empty()) {
            double r = 0.0;
            size_t matched = 0;
            const aes_status st =
                aes_evaluate_score_file(eval_scores.c_str(), eval_labels.c_str(), eval_axis.c_str(), &r, &matched);
            if (st != AES_OK) {
                status = report_failure("eval", st);
                return;
            }
            std::printf("matched %zu utt-PCC %s %.6f\n", matched, eval_axis.c_str(), r);
            return;
        }
        CString text;
        const aes_status st = aes_evaluate(eval_pred.c_str(), eval_labels.c_str(), per_system, axis_matrix,
                                           opt(eval_report), opt(eval_csv), &text.p);
        if (st != AES_OK) {
            status = report_failure("eval", st);
            return;
        }
        std::fputs(text.c_str(), stdout);
    });

    // curate -----------------------------------------------------------------
    auto* curate = app.add_subcommand("curate", "Score-based manifest curation");
    curate->require_subcommand(1);

    auto* filter = curate->add_subcommand("filter", "Drop entries below the p-th percentile score");
    std::string f_in, f_out, f_axis = "PQ", f_report;
    double f_percentile = 25.0;
    filter->add_option("--manifest", f_in, "Input manifest with scores")->required();
    filter->add_option("--out", f_out, "Filtered manifest")->required();
    filter->add_option("--axis", f_axis, "Score axis")->capture_default_str();
    filter->add_option("--percentile", f_percentile, "Percentile p in [0, 100]")->capture_default_str();
    filter->add_option("--report", f_report, "Write the curation report here");
    filter->callback([&] {
        CString report;
        const aes_status st = aes_curate_filter(f_in.c_str(), f_out.c_str(), f_axis.c_str(), f_percentile, &report.p);
        if (st != AES_OK) {
            status = report_failure("curate filter", st);
            return;
        }
        std::fputs(report.c_str(), stdout);
        if (!f_report.empty()) {
            if (FILE* fp = std::fopen(f_report.c_str(), "wb")) {
                std::fputs(report.c_str(), fp);
                std::fclose(fp);
            } else {
                std::fprintf(stderr, "aes curate filter: cannot write %s\n", f_report.c_str());
                status = kData;
            }
        }
    });

    auto* prompt = curate->add_subcommand("prompt", "Prefix captions with quantized quality scores");
    std::string p_in, p_out, p_axis = "PQ";
    int p_rounding = 2;
    bool p_inference = false;
    double p_percentile = 50.0;
    prompt->add_option("--manifest", p_in, "Input manifest with captions and scores")->required();
    prompt->add_option("--out", p_out, "Prompted manifest (training mode)");
    prompt->add_option("--axis", p_axis, "Score axis")->capture_default_str();
    prompt->add_option("--rounding", p_rounding, "Grid factor r (scores rounded to 1/r)")->capture_default_str();
    prompt->add_flag("--inference", p_inference, "Print the fixed inference prefix instead");
    prompt->add_option("--percentile", p_percentile, "Percentile of training scores for --inference")
        ->capture_default_str();
    prompt->callback([&] {
        CString text;
        aes_status st;
        if (p_inference) {
            st = aes_inference_prefix(p_in.c_str(), p_axis.c_str(), p_percentile, p_rounding, &text.p);
            if (st == AES_OK) std::printf("%s\n", text.c_str());
        } else {
            if (p_out.empty()) throw CLI::ValidationError("curate prompt", "--out is required without --inference");
            st = aes_curate_prompt(p_in.c_str(), p_out.c_str(), p_axis.c_str(), p_rounding, &text.p);
            if (st == AES_OK) std::fputs(text.c_str(), stdout);
        }
        if (st != AES_OK) status = report_failure("curate prompt", st);
    });

    auto* label = curate->add_subcommand("pseudo-label", "Attach predicted scores to a manifest");
    std::string l_ckpt, l_in, l_out, l_axes = "PQ";
    bool l_overwrite = false;
    int l_jobs = 1;
    label->add_option("--checkpoint", l_ckpt, "Model checkpoint")->required();
    label->add_option("--manifest", l_in, "Input manifest")->required();
    label->add_option("--out", l_out, "Output manifest")->required();
    label->add_option("--axes", l_axes, "Axes to fill, comma separated")->capture_default_str();
    label->add_flag("--overwrite", l_overwrite, "Re-score entries that already carry scores");
    label->add_option("--jobs", l_jobs, "Worker threads")->capture_default_str();
    label->callback([&] {
        ModelHandle model;
        aes_status st = aes_model_load(l_ckpt.c_str(), &model.p);
        CString report;
        if (st == AES_OK)
            st = aes_pseudo_label(model.p, l_in.c_str(), l_out.c_str(), l_axes.c_str(), l_overwrite, l_jobs, &report.p);
        if (st != AES_OK) {
            status = report_failure("curate pseudo-label", st);
            return;
        }
        std::fputs(report.c_str(), stdout);
    });

    // qualify ----------------------------------------------------------------
    auto* qualify = app.add_subcommand("qualify", "Rater qualification against a golden set (PQ and PC)");
    std::string q_rater, q_golden;
    double q_threshold = 0.7;
    qualify->add_option("--rater", q_rater, "Rater answers (manifest records)")->required();
    qualify->add_option("--golden", q_golden, "Golden labels (manifest records)")->required();
    qualify->add_option("--threshold", q_threshold, "Pass iff Pearson r > threshold on both axes")
        ->capture_default_str();
    qualify->callback([&] {
        aes_qualify_result r{};
        CString reason;
        const aes_status st = aes_qualify(q_rater.c_str(), q_golden.c_str(), q_threshold, &r, &reason.p);
        if (st != AES_OK) {
            status = report_failure("qualify", st);
            return;
        }
        std::printf("%s r_pq %.6f r_pc %.6f\n", r.pass ? "pass" : "fail", r.r_pq, r.r_pc);
        std::fputs(reason.c_str(), stdout);
    });

    // grad-check -------------------------------------------------------------
    auto* gc = app.add_subcommand("grad-check", "Compare analytic gradients with central finite differences");
    EncoderFlags gc_enc;
    std::uint64_t gc_seed = 0;
    double gc_tol = 1e-4;
    std::size_t gc_batch = 3;
    bool gc_verbose = false;
    gc->add_option("--seed", gc_seed, "Random seed")->capture_default_str();
    gc->add_option("--tolerance", gc_tol, "Maximum relative error")->capture_default_str();
    gc->add_option("--batch", gc_batch, "Samples in the checked batch")->capture_default_str();
    gc->add_flag("--verbose", gc_verbose, "List skipped coordinates");
    gc_enc.add(gc, "tiny");
    gc->callback([&] {
        aes_encoder_config enc;
        aes_status st = gc_enc.resolve(&enc);
        aes_gradcheck_result r{};
        CString report;
        if (st == AES_OK) st = aes_grad_check(&enc, gc_seed, gc_tol, gc_batch, &r, &report.p);
        if (st != AES_OK) {
            status = report_failure("grad-check", st);
            return;
        }
        std::printf("%s parameters %zu checked %zu skipped %zu failing %zu max_rel_error %.3e\n",
                    r.passed ? "pass" : "fail", r.parameter_count, r.checked, r.skipped, r.failing,
                    r.max_relative_error);
        std::string text = report.c_str();
        if (!gc_verbose) {
            std::string kept;
            std::size_t pos = 0;
            while (pos < text.size()) {
                std::size_t end = text.find('\n', pos);
                if (end == std::string::npos) end = text.size();
                const std::string line = text.substr(pos, end - pos);
                if (line.rfind("skipped ", 0) != 0) kept += line + "\n";
                pos = end + 1;
            }
            text = kept;
        }
        std::fputs(text.c_str(), stdout);
        if (!r.passed) status = kNumerical;
    });

    // pairwise ---------------------------------------------------------------
    auto* pairwise = app.add_subcommand("pairwise", "Net win rate with a bootstrap confidence interval");
    std::string pw_votes;
    std::size_t pw_resamples = 1000;
    std::uint64_t pw_seed = 0;
    pairwise->add_option("--votes", pw_votes, "Votes file (+1 A better, 0 tie, -1 B better)")->required();
    pairwise->add_option("--resamples", pw_resamples, "Bootstrap resamples")->capture_default_str();
    pairwise->add_option("--seed", pw_seed, "Random seed")->capture_default_str();
    pairwise->callback([&] {
        aes_pairwise_result r{};
        const aes_status st = aes_pairwise_file(pw_votes.c_str(), pw_resamples, pw_seed, &r);
        if (st != AES_OK) {
            status = report_failure("pairwise", st);
            return;
        }
        std::printf("net_win_rate %.4f%% ci [%.4f%%, %.4f%%] pairs %zu resamples %zu\n", r.net_win_rate, r.ci_low,
                    r.ci_high, r.n_pairs, r.n_resamples);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    return status;
}
