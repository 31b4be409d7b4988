#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aes/manifest.hpp"
#include "aes/scores.hpp"

namespace aes::metrics {

/// Sample Pearson correlation. Throws Error(Data) when the lengths differ,
/// fewer than two points are given, or either argument has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Ranks starting at 1; tied values share the mean of their rank span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Percentile with linear interpolation between order statistics
/// (position p/100 * (n-1) in the sorted sample). Shared by curation.
double percentile(std::span<const double> values, double p);

using AxisValues = std::array<double, kNumAxes>;

/// Per-axis Pearson over aligned prediction/label lists.
AxisValues utt_pcc(std::span<const AesScores> pred, std::span<const AesScores> truth);

struct SystemScore {
    std::string system_id;
    double score = 0.0;
};

/// Unweighted mean per system, keyed by id.
std::map<std::string, double> system_means(std::span<const SystemScore> scores);

/// Spearman over per-system means. Requires >= 2 systems and identical
/// system sets in both lists.
double sys_srcc(std::span<const SystemScore> pred, std::span<const SystemScore> truth);

using AxisMatrix = std::array<std::array<double, kNumAxes>, kNumAxes>;

/// Pairwise Pearson between the four axes of a label set.
AxisMatrix axis_correlation_matrix(std::span<const AesScores> labels);

struct RaterDecision {
    bool pass = false;
    double r = 0.0;
    std::string reason;  // empty when passing
};

inline constexpr double kRaterThreshold = 0.7;

/// Passes iff pearson(rater, golden) > threshold. Constant answers fail with a
/// zero-variance reason instead of raising.
RaterDecision rater_qualify(std::span<const double> rater, std::span<const double> golden,
                            double threshold = kRaterThreshold);

struct RaterAxesDecision {
    bool pass = false;
    RaterDecision pq;
    RaterDecision pc;
};

/// Qualification on the PQ and PC axes; both must pass.
RaterAxesDecision rater_qualify_axes(std::span<const AesScores> rater, std::span<const AesScores> golden,
                                     double threshold = kRaterThreshold);

struct PairwiseResult {
    double net_win_rate = 0.0;  // percent, [-100, 100]
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_pairs = 0;
    std::size_t n_resamples = 0;
};

inline constexpr std::size_t kDefaultResamples = 1000;

/// Votes are +1 (A better), 0 (similar), -1 (B better). The interval is the
/// 2.5/97.5 percentile of `n_resamples` bootstrap means; resample i draws
/// from its own RNG stream keyed on (seed, i).
PairwiseResult bootstrap_net_win(std::span<const int> votes, std::size_t n_resamples = kDefaultResamples,
                                 std::uint64_t seed = 0);

/// Joins rater answers to the golden set on audio_path; every golden record
/// needs an answer. Decided by rater_qualify_axes.
RaterAxesDecision qualify_records(std::span<const ManifestEntry> rater, std::span<const ManifestEntry> golden,
                                  double threshold = kRaterThreshold);

/// One JSON value per line: an integer vote or an object with a "vote" field.
std::vector<int> read_votes(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Evaluation over manifest files.

struct EvalOptions {
    bool per_system = false;
    bool axis_matrix = false;
};

struct EvalReport {
    std::size_t n_pred = 0;
    std::size_t n_labels = 0;
    std::size_t n_matched = 0;
    std::array<std::optional<double>, kNumAxes> utt_pcc;
    std::array<std::optional<double>, kNumAxes> sys_srcc;
    std::size_t n_systems = 0;
    /// system id -> (predicted mean, label mean) per axis
    std::map<std::string, std::pair<AxisValues, AxisValues>> per_system;
    std::optional<AxisMatrix> label_axis_matrix;
    std::optional<AxisMatrix> pred_axis_matrix;
};

/// Joins predictions to labels on audio_path. Axes lacking scores on either
/// side are left empty in the report.
EvalReport evaluate(std::span<const ManifestEntry> predictions, std::span<const ManifestEntry> labels,
                    const EvalOptions& options = {});

std::string format_eval_report(const EvalReport& report);
/// metric,axis,value rows.
std::string format_eval_csv(const EvalReport& report);

/// Reads third-party score files: one "path<sep>score" pair per line, where
/// the separator is a comma, tab or spaces. Lines starting with '#' and a
/// leading header whose score column is not numeric are skipped.
std::vector<std::pair<std::string, double>> read_score_file(const std::filesystem::path& path);

}  // namespace aes::metrics
