#include "aes/curation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "aes/error.hpp"
#include "aes/metrics.hpp"

namespace aes::curation {

double percentile_threshold(std::span<const double> values, double p) { return metrics::percentile(values, p); }

FilterResult filter_manifest(std::span<const ManifestEntry> entries, Axis axis, double p) {
    std::vector<double> values;
    values.reserve(entries.size());
    std::string missing;
    std::size_t n_missing = 0;
    for (const ManifestEntry& e : entries) {
        if (!e.has_score(axis)) {
            if (n_missing++ < 10) missing += (missing.empty() ? "" : ", ") + e.audio_path;
            continue;
        }
        values.push_back(*e.scores[index(axis)]);
    }
    if (n_missing > 0)
        fail(ErrorKind::Data, std::to_string(n_missing) + " entries lack a " + std::string(axis_name(axis)) +
                                  " score: " + missing + (n_missing > 10 ? ", ..." : ""));

    FilterResult out;
    out.report.axis = axis;
    out.report.percentile = p;
    if (entries.empty()) return out;
    out.report.threshold = percentile_threshold(values, p);
    for (const ManifestEntry& e : entries) {
        if (*e.scores[index(axis)] >= out.report.threshold) out.kept.push_back(e);
    }
    out.report.kept = out.kept.size();
    out.report.dropped = entries.size() - out.kept.size();
    return out;
}

std::string format_filter_report(const FilterReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "axis %s\npercentile %s\nthreshold %.17g\nkept %zu\ndropped %zu\n",
                  std::string(axis_name(r.axis)).c_str(), render_score(r.percentile).c_str(), r.threshold, r.kept,
                  r.dropped);
    return buf;
}

double quantize_score(double y, int rounding) {
    if (rounding < 1) fail(ErrorKind::Usage, "rounding factor must be >= 1");
    if (!std::isfinite(y)) fail(ErrorKind::Data, "cannot quantize a non-finite score");
    return std::round(y * rounding) / rounding;
}

std::string render_score(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string quality_prefix(double y, int rounding) {
    return std::string(kQualityPrefix) + render_score(quantize_score(y, rounding));
}

std::optional<double> parse_quality_prefix(std::string_view text) {
    if (!text.starts_with(kQualityPrefix)) return std::nullopt;
    text.remove_prefix(kQualityPrefix.size());
    const std::size_t end = std::min(text.find(' '), text.size());
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + end, v);
    if (ec != std::errc() || ptr != text.data() + end) return std::nullopt;
    return v;
}

std::vector<ManifestEntry> apply_prompting(std::span<const ManifestEntry> entries, Axis axis, int rounding) {
    std::vector<ManifestEntry> out;
    out.reserve(entries.size());
    for (const ManifestEntry& e : entries) {
        if (!e.caption) fail(ErrorKind::Data, "record '" + e.audio_path + "' has no caption");
        if (!e.has_score(axis))
            fail(ErrorKind::Data, "record '" + e.audio_path + "' has no " + std::string(axis_name(axis)) + " score");
        if (e.caption->starts_with(kQualityPrefix))
            fail(ErrorKind::Data, "record '" + e.audio_path + "' already carries a quality prefix");
        ManifestEntry p = e;
        p.caption = quality_prefix(*e.scores[index(axis)], rounding) + " " + *e.caption;
        out.push_back(std::move(p));
    }
    return out;
}

std::string inference_prefix(std::span<const double> training_scores, double p, int rounding) {
    return quality_prefix(percentile_threshold(training_scores, p), rounding);
}

PseudoLabelResult pseudo_label(std::span<const ManifestEntry> entries, const model::ModelParams& params,
                               std::span<const Axis> axes, const PseudoLabelOptions& options) {
    if (axes.empty()) fail(ErrorKind::Usage, "pseudo_label needs at least one axis");
    PseudoLabelResult out;
    out.entries.assign(entries.begin(), entries.end());

    std::vector<std::size_t> todo;
    std::vector<ManifestEntry> pending;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const bool scored = std::all_of(axes.begin(), axes.end(), [&](Axis a) { return entries[i].has_score(a); });
        if (scored && !options.overwrite) {
            ++out.skipped;
            continue;
        }
        todo.push_back(i);
        pending.push_back(entries[i]);
    }

    const auto results = inference::batch_predict(pending, params, options.batch);
    for (std::size_t k = 0; k < todo.size(); ++k) {
        if (!results[k].ok()) {
            out.failures.push_back(results[k]);
            continue;
        }
        ManifestEntry& e = out.entries[todo[k]];
        for (Axis a : axes) e.scores[index(a)] = results[k].prediction->scores[a];
        ++out.scored;
    }
    return out;
}

}  // namespace aes::curation
