#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aes/checkpoint.hpp"
#include "aes/manifest.hpp"
#include "aes/model.hpp"
#include "aes/trace.hpp"

namespace aes::training {

using model::AdamState;
using model::EncoderConfig;
using model::ModelParams;
using model::ParamBuffer;
using model::RawScores;

/// Which axes contribute to the loss. All four by default; a single axis
/// reproduces the one-model-per-axis setup.
using AxisMask = std::array<bool, kNumAxes>;
inline constexpr AxisMask kAllAxesMask{true, true, true, true};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 16;
    int steps = 2000;
    /// Linear warmup from 0 to learning_rate over this many steps, then a
    /// linear decay to 0 at `steps` (when decay is on).
    int warmup_steps = 100;
    bool decay = true;
    std::uint64_t seed = 0;
    double chunk_seconds = 10.0;
    /// Global gradient-norm clip; <= 0 disables.
    double clip_norm = 1.0;
    AxisMask axes = kAllAxesMask;
    int jobs = 1;
    /// Stop after this step (for split runs); the schedule still spans `steps`.
    std::optional<std::int64_t> stop_after;

    void validate() const;
};

struct LossBreakdown {
    double total = 0.0;
    RawScores per_axis{};
};

/// sum over axes of (y - y_hat)^2 + |y - y_hat|, in normalized-target space.
LossBreakdown loss_aes(const RawScores& pred, const RawScores& target, const AxisMask& axes = kAllAxesMask);

/// d loss / d pred, with the MAE subgradient taken as 0 at a zero residual.
RawScores loss_gradient(const RawScores& pred, const RawScores& target, const AxisMask& axes = kAllAxesMask);

/// Accumulates d loss / d params for one traced sample into `grads`, given
/// d loss / d raw outputs.
void backprop_sample(const model::ForwardTrace& trace, const ModelParams& params, const RawScores& output_grad,
                     ParamBuffer& grads);

struct BatchItem {
    std::span<const float> waveform;
    RawScores target{};
};

struct BackwardResult {
    double loss = 0.0;  // mean over the batch
    RawScores per_axis{};
    ParamBuffer grads;
    std::vector<RawScores> predictions;
};

/// Exact gradient of the mean batch loss. Samples may run on `jobs`
/// threads; per-sample gradients are summed in batch order so the result is
/// bitwise independent of `jobs`. Non-finite loss raises Error(Numerical).
BackwardResult backward(std::span<const BatchItem> batch, const ModelParams& params,
                        const AxisMask& axes = kAllAxesMask, int jobs = 1);

/// Scheduled learning rate for 1-based `step`.
double learning_rate_at(const TrainConfig& config, std::int64_t step);

/// One bias-corrected Adam update; advances state.step by one.
void adam_step(ParamBuffer& params, const ParamBuffer& grads, AdamState& state, const TrainConfig& config);

/// Rescales grads to at most max_norm; returns the norm before clipping.
double clip_gradient_norm(ParamBuffer& grads, double max_norm);

// ---------------------------------------------------------------------------

/// A training clip already conditioned to mono 16 kHz.
struct TrainingClip {
    std::vector<float> waveform;
    AesScores label;
};

/// Arithmetic mean of the available ratings for one clip.
AesScores aggregate_ratings(std::span<const AesScores> ratings);

/// Decodes every manifest entry (relative paths against base_dir), converts
/// it to mono 16 kHz and pairs it with its label. Missing scores or labels
/// outside [1, 10] raise Error(Data).
std::vector<TrainingClip> load_training_clips(std::span<const ManifestEntry> entries,
                                              const std::filesystem::path& base_dir);

struct TrainLogRow {
    std::int64_t step = 0;
    double loss = 0.0;
    RawScores axis_loss{};
    double learning_rate = 0.0;
};

struct TrainResult {
    ModelParams params;
    AdamState optimizer;
    std::vector<TrainLogRow> log;
    /// Set when training stopped on a non-finite loss; params/optimizer then
    /// hold the last good state.
    std::optional<std::string> aborted;
};

using StepCallback = std::function<void(const TrainLogRow&)>;

/// Normalizes targets over the corpus, then runs `config.steps` Adam steps
/// on shuffled batches, cropping clips longer than chunk_seconds at a random
/// offset. Deterministic for a given seed. With `resume`, continues from the
/// saved optimizer step using its parameters and normalizer.
TrainResult train_run(std::span<const TrainingClip> corpus, const TrainConfig& config,
                      const EncoderConfig& encoder, const model::Checkpoint* resume = nullptr,
                      const StepCallback& on_step = {});

/// CSV with header step,loss,loss_pq,loss_pc,loss_ce,loss_cu,lr.
std::string format_train_log(std::span<const TrainLogRow> rows);

// ---------------------------------------------------------------------------

struct GradCheckOptions {
    double step = 1e-5;
    std::size_t batch_size = 3;
    std::size_t frames_per_sample = 4;
    /// Force sample 0's residual on this axis to exactly zero.
    std::optional<Axis> kink_axis;
    /// Fault injection: double this analytic gradient coordinate before comparing.
    std::optional<std::size_t> corrupt_coordinate;
    /// Denominator floor of the relative error max(|a|, |n|, floor).
    double relative_floor = 1e-5;
};

struct GradCheckReport {
    std::size_t parameter_count = 0;
    std::size_t checked = 0;
    std::vector<std::string> skipped;  // coordinates straddling the MAE kink
    double max_relative_error = 0.0;
    std::string worst_coordinate;
    std::vector<std::string> failing;  // coordinates above tolerance
    bool passed = false;
    double seconds = 0.0;
};

/// Compares every analytic gradient coordinate of a randomly initialized
/// model against central finite differences. Gradient clipping is not
/// applied.
GradCheckReport grad_check(const EncoderConfig& config, std::uint64_t seed, double tolerance,
                           const GradCheckOptions& options = {});

}  // namespace aes::training
