/* C interface to the audio aesthetics library (libaes).
 *
 * Every fallible call returns an aes_status. On failure the message is
 * available from aes_last_error() on the same thread until the next call.
 * Strings returned through char** out-parameters are heap-allocated by the
 * library and must be released with aes_string_free().
 */
#ifndef AES_AES_H
#define AES_AES_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define AES_API
#else
#define AES_API __attribute__((visibility("default")))
#endif

typedef enum aes_status {
    AES_OK = 0,
    AES_ERR_USAGE = 1,
    AES_ERR_IO = 2,
    AES_ERR_UNSUPPORTED_CODEC = 3,
    AES_ERR_TRUNCATED = 4,
    AES_ERR_FORMAT = 5,
    AES_ERR_DATA = 6,
    AES_ERR_NUMERICAL = 7,
    AES_ERR_INTERNAL = 8
} aes_status;

AES_API const char* aes_status_string(aes_status status);
AES_API const char* aes_last_error(void);
AES_API void aes_string_free(char* s);
AES_API const char* aes_version(void);

typedef struct aes_scores {
    double pq;
    double pc;
    double ce;
    double cu;
} aes_scores;

/* ------------------------------------------------------------------------ */
/* Encoder configuration                                                    */

typedef struct aes_encoder_config {
    int num_layers;
    int hidden_dim;
    int num_heads;
    int ffn_dim;
    int frame_size;
    int frame_stride;
    int max_frames;
    int head_blocks;
    int positional_encoding; /* nonzero: add sinusoidal encodings */
} aes_encoder_config;

/* name: "desk" (default), "tiny" or "base". */
AES_API aes_status aes_encoder_config_preset(const char* name, aes_encoder_config* out);

/* ------------------------------------------------------------------------ */
/* Model                                                                    */

typedef struct aes_model aes_model;

AES_API aes_status aes_model_load(const char* checkpoint_path, aes_model** out);
AES_API void aes_model_free(aes_model* model);
AES_API aes_status aes_model_config(const aes_model* model, aes_encoder_config* out);

/* Utterance-level score of mono 16 kHz samples (10 s windows, length-weighted). */
AES_API aes_status aes_model_predict_samples(const aes_model* model, const float* samples, size_t count,
                                             aes_scores* out, size_t* window_count);

/* Decodes a WAV file, converts it to mono 16 kHz and scores it. */
AES_API aes_status aes_model_predict_file(const aes_model* model, const char* wav_path, aes_scores* out,
                                          size_t* window_count);

/* Scores every record of a JSON Lines manifest and writes a prediction
 * manifest. Unreadable files are counted in *failed and described in
 * *failures (one "path: message" line each) without aborting the batch. */
AES_API aes_status aes_model_predict_manifest(const aes_model* model, const char* manifest_path,
                                              const char* out_path, int jobs, size_t* scored, size_t* failed,
                                              char** failures);

/* ------------------------------------------------------------------------ */
/* Synthetic corpus                                                         */

typedef struct aes_synth_options {
    size_t count;
    uint64_t seed;
    double duration_s;
    int severity_buckets;
    int jobs;
} aes_synth_options;

AES_API void aes_synth_options_init(aes_synth_options* options);

/* Writes out_dir/clips/NNNNN.wav and out_dir/manifest.jsonl. */
AES_API aes_status aes_synth_corpus(const char* out_dir, const aes_synth_options* options);

/* ------------------------------------------------------------------------ */
/* Training                                                                 */

enum {
    AES_AXIS_PQ = 1u << 0,
    AES_AXIS_PC = 1u << 1,
    AES_AXIS_CE = 1u << 2,
    AES_AXIS_CU = 1u << 3,
    AES_AXIS_ALL = 0xFu
};

typedef struct aes_train_options {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    int batch_size;
    int steps;
    int warmup_steps;
    int decay;
    uint64_t seed;
    double chunk_seconds;
    double clip_norm;   /* <= 0 disables gradient clipping */
    unsigned axes;      /* AES_AXIS_* mask */
    int jobs;
    int64_t stop_after; /* <= 0: run to `steps` */
} aes_train_options;

AES_API void aes_train_options_init(aes_train_options* options);

typedef void (*aes_train_progress)(int64_t step, double loss, double learning_rate, void* user);

/* Trains on a manifest and saves a checkpoint with optimizer state. When
 * resume_path is non-null training continues from that checkpoint (the
 * encoder config is then taken from it). log_csv may be null. On divergence
 * the last good state is still saved and AES_ERR_NUMERICAL is returned. */
AES_API aes_status aes_train(const char* manifest_path, const aes_encoder_config* encoder,
                             const aes_train_options* options, const char* resume_path,
                             const char* checkpoint_out, const char* log_csv, aes_train_progress progress,
                             void* user, char** summary);

typedef struct aes_gradcheck_result {
    size_t parameter_count;
    size_t checked;
    size_t skipped;
    size_t failing;
    double max_relative_error;
    double seconds;
    int passed;
} aes_gradcheck_result;

/* report lists the worst coordinate and any failing/skipped coordinates. */
AES_API aes_status aes_grad_check(const aes_encoder_config* encoder, uint64_t seed, double tolerance,
                                  size_t batch_size, aes_gradcheck_result* out, char** report);

/* ------------------------------------------------------------------------ */
/* Evaluation                                                               */

/* Joins predictions and labels on audio_path. report_path/csv_path may be
 * null; report_text receives the human-readable report. */
AES_API aes_status aes_evaluate(const char* pred_path, const char* label_path, int per_system, int axis_matrix,
                                const char* report_path, const char* csv_path, char** report_text);

/* Third-party "path score" files correlated against one label axis. */
AES_API aes_status aes_evaluate_score_file(const char* score_path, const char* label_path, const char* axis,
                                           double* utt_pcc, size_t* matched);

AES_API aes_status aes_pearson(const double* x, const double* y, size_t n, double* out);
AES_API aes_status aes_spearman(const double* x, const double* y, size_t n, double* out);

typedef struct aes_qualify_result {
    int pass;
    int pq_pass;
    int pc_pass;
    double r_pq;
    double r_pc;
} aes_qualify_result;

/* Rater and golden files are manifests keyed on audio_path; PQ and PC must
 * both correlate above threshold. reason may be null. */
AES_API aes_status aes_qualify(const char* rater_path, const char* golden_path, double threshold,
                               aes_qualify_result* out, char** reason);

typedef struct aes_pairwise_result {
    double net_win_rate;
    double ci_low;
    double ci_high;
    size_t n_pairs;
    size_t n_resamples;
} aes_pairwise_result;

AES_API aes_status aes_bootstrap_net_win(const int* votes, size_t count, size_t resamples, uint64_t seed,
                                         aes_pairwise_result* out);

/* Votes file: one JSON value per line, either an integer or an object with
 * a "vote" field. */
AES_API aes_status aes_pairwise_file(const char* votes_path, size_t resamples, uint64_t seed,
                                     aes_pairwise_result* out);

/* ------------------------------------------------------------------------ */
/* Curation                                                                 */

/* axis: "PQ", "PC", "CE" or "CU" (case-insensitive). */
AES_API aes_status aes_curate_filter(const char* in_path, const char* out_path, const char* axis,
                                     double percentile, char** report);
AES_API aes_status aes_curate_prompt(const char* in_path, const char* out_path, const char* axis, int rounding,
                                     char** report);
AES_API aes_status aes_inference_prefix(const char* training_manifest, const char* axis, double percentile,
                                        int rounding, char** prefix);
AES_API aes_status aes_quality_prefix(double score, int rounding, char** prefix);

/* axes: comma-separated list such as "PQ" or "PQ,PC,CE,CU". */
AES_API aes_status aes_pseudo_label(const aes_model* model, const char* in_path, const char* out_path,
                                    const char* axes, int overwrite, int jobs, char** report);

#ifdef __cplusplus
}
#endif

#endif /* AES_AES_H */
