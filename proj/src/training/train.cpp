#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "aes/audio_io.hpp"
#include "aes/error.hpp"
#include "aes/rng.hpp"
#include "aes/training.hpp"

namespace aes::training {

namespace {

// Epoch permutations are derived from (seed, epoch) alone, so any step's
// batch can be reconstructed without replaying earlier steps.
class SampleStream {
public:
    SampleStream(std::size_t corpus_size, std::uint64_t seed) : n_(corpus_size), seed_(seed) {}

    struct Pick {
        std::uint64_t epoch;
        std::size_t index;
    };

    Pick at(std::uint64_t position) {
        const std::uint64_t epoch = position / n_;
        return {epoch, permutation(epoch)[position % n_]};
    }

private:
    const std::vector<std::size_t>& permutation(std::uint64_t epoch) {
        auto it = cache_.find(epoch);
        if (it != cache_.end()) return it->second;
        if (cache_.size() > 4) cache_.erase(cache_.begin());
        std::vector<std::size_t> perm(n_);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        auto g = make_stream(seed_, {tag(StreamTag::Shuffle), epoch});
        for (std::size_t i = n_; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(g, i)]);
        return cache_.emplace(epoch, std::move(perm)).first->second;
    }

    std::size_t n_;
    std::uint64_t seed_;
    std::map<std::uint64_t, std::vector<std::size_t>> cache_;
};

}  // namespace

TrainResult train_run(std::span<const TrainingClip> corpus, const TrainConfig& config, const EncoderConfig& encoder,
                      const model::Checkpoint* resume, const StepCallback& on_step) {
    config.validate();
    encoder.validate();
    if (corpus.empty()) fail(ErrorKind::Data, "training corpus is empty");

    std::vector<AesScores> labels;
    labels.reserve(corpus.size());
    for (const TrainingClip& c : corpus) {
        if (c.waveform.empty()) fail(ErrorKind::Data, "training corpus contains an empty clip");
        labels.push_back(c.label);
    }
    const model::NormalizedTargets targets = model::normalize_targets(labels);

    TrainResult result;
    if (resume) {
        if (!resume->optimizer) fail(ErrorKind::Usage, "resume checkpoint carries no optimizer state");
        if (!(resume->params.config == encoder)) fail(ErrorKind::Usage, "resume checkpoint config differs from the requested encoder");
        result.params = resume->params;
        result.optimizer = *resume->optimizer;
    } else {
        result.params = ModelParams::initialize(encoder, config.seed);
        result.params.normalizer = targets.stats;
        result.optimizer = AdamState::zeros_like(result.params.weights);
    }
    std::vector<RawScores> normalized(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) normalized[i] = result.params.normalizer.normalize(corpus[i].label);

    const auto fit = static_cast<std::size_t>(encoder.frame_size + (encoder.max_frames - 1) * encoder.frame_stride);
    const auto chunk = std::min<std::size_t>(
        fit, static_cast<std::size_t>(std::llround(config.chunk_seconds * audio::kModelSampleRate)));
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    const std::int64_t last_step = std::min<std::int64_t>(config.steps, config.stop_after.value_or(config.steps));
    SampleStream stream(corpus.size(), config.seed);

    for (std::int64_t step = result.optimizer.step + 1; step <= last_step; ++step) {
        std::vector<BatchItem> batch;
        batch.reserve(batch_size);
        for (std::size_t j = 0; j < batch_size; ++j) {
            const auto pick = stream.at(static_cast<std::uint64_t>(step - 1) * batch_size + j);
            const std::vector<float>& wave = corpus[pick.index].waveform;
            std::size_t offset = 0;
            std::size_t length = wave.size();
            if (length > chunk) {
                auto g = make_stream(config.seed, {tag(StreamTag::Crop), pick.epoch, pick.index});
                offset = static_cast<std::size_t>(uniform_index(g, length - chunk + 1));
                length = chunk;
            }
            batch.push_back({std::span<const float>(wave).subspan(offset, length), normalized[pick.index]});
        }

        BackwardResult grads;
        try {
            grads = backward(batch, result.params, config.axes, config.jobs);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numerical) throw;
            result.aborted = "training diverged at step " + std::to_string(step) + ": " + e.what();
            return result;
        }

        if (config.clip_norm > 0.0) clip_gradient_norm(grads.grads, config.clip_norm);

        TrainLogRow row;
        row.step = step;
        row.loss = grads.loss;
        row.axis_loss = grads.per_axis;
        row.learning_rate = learning_rate_at(config, step);

        model::ParamBuffer before = result.params.weights;
        AdamState before_opt = result.optimizer;
        adam_step(result.params.weights, grads.grads, result.optimizer, config);
        for (double v : result.params.weights.flat()) {
            if (!std::isfinite(v)) {
                result.params.weights = std::move(before);
                result.optimizer = std::move(before_opt);
                result.aborted = "training diverged at step " + std::to_string(step) + ": non-finite parameter";
                return result;
            }
        }

        result.log.push_back(row);
        if (on_step) on_step(row);
    }
    return result;
}

std::string format_train_log(std::span<const TrainLogRow> rows) {
    std::string out = "step,loss,loss_pq,loss_pc,loss_ce,loss_cu,lr\n";
    char line[256];
    for (const TrainLogRow& r : rows) {
        std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.step),
                      r.loss, r.axis_loss[0], r.axis_loss[1], r.axis_loss[2], r.axis_loss[3], r.learning_rate);
        out += line;
    }
    return out;
}

}  // namespace aes::training
