#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aes/inference.hpp"
#include "aes/manifest.hpp"
#include "aes/model.hpp"
#include "aes/scores.hpp"

namespace aes::curation {

inline constexpr std::string_view kQualityPrefix = "Audio quality:";

/// Linear-interpolation percentile (same definition as metrics::percentile).
double percentile_threshold(std::span<const double> values, double p);

struct FilterReport {
    Axis axis = Axis::PQ;
    double percentile = 0.0;
    double threshold = 0.0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

struct FilterResult {
    std::vector<ManifestEntry> kept;
    FilterReport report;
};

/// Keeps entries whose `axis` score is >= the p-th percentile of the input.
/// Entries without that score raise Error(Data) listing their paths.
FilterResult filter_manifest(std::span<const ManifestEntry> entries, Axis axis, double p);

std::string format_filter_report(const FilterReport& report);

/// round(y * r) / r with halves rounded away from zero.
double quantize_score(double y, int rounding);

/// Shortest decimal text that parses back to `value`, with at least one
/// fractional digit ("6.0", "7.5", "7.4").
std::string render_score(double value);

/// "Audio quality:<round(y r)/r>".
std::string quality_prefix(double y, int rounding);

/// Inverse of quality_prefix; nullopt when the text does not start with a
/// well-formed prefix.
std::optional<double> parse_quality_prefix(std::string_view text);

/// Rewrites each caption as "<prefix> <caption>" from the entry's own score.
/// Missing captions or scores, and captions that already carry the prefix,
/// raise Error(Data).
std::vector<ManifestEntry> apply_prompting(std::span<const ManifestEntry> entries, Axis axis, int rounding);

/// Fixed inference-time prefix: the p-th percentile of the training scores,
/// placed on the same 1/r grid.
std::string inference_prefix(std::span<const double> training_scores, double p, int rounding);

struct PseudoLabelOptions {
    bool overwrite = false;
    inference::BatchOptions batch;
};

struct PseudoLabelResult {
    std::vector<ManifestEntry> entries;
    std::size_t scored = 0;
    std::size_t skipped = 0;  // already scored, overwrite off
    std::vector<inference::FilePrediction> failures;
};

/// Attaches predicted scores on `axes` to every entry. Failed files keep
/// their original record and are listed in `failures`.
PseudoLabelResult pseudo_label(std::span<const ManifestEntry> entries, const model::ModelParams& params,
                               std::span<const Axis> axes, const PseudoLabelOptions& options = {});

}  // namespace aes::curation
