#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aes/scores.hpp"

namespace aes {

inline constexpr int kSchemaVersion = 1;

/// One JSON Lines record shared by training, inference and curation:
///   {"schema_version":1,"audio_path":...,"caption":...,"pq":...,"pc":...,
///    "ce":...,"cu":...,"system_id":...,"modality":...,<extra fields>}
/// Every score is optional so partially labeled manifests round-trip.
struct ManifestEntry {
    std::string audio_path;
    std::optional<std::string> caption;
    std::array<std::optional<double>, kNumAxes> scores{};
    std::optional<std::string> system_id;
    std::optional<std::string> modality;
    /// Unrecognized keys, kept in input order as (key, serialized JSON value).
    std::vector<std::pair<std::string, std::string>> extra;

    bool has_score(Axis axis) const noexcept { return scores[index(axis)].has_value(); }
    bool has_all_scores() const noexcept;
    /// Throws Error(Data) naming the path when any axis is missing.
    AesScores require_scores() const;
    void set_scores(const AesScores& s);

    /// Extra field lookup (serialized JSON) or nullopt.
    std::optional<std::string> extra_field(std::string_view key) const;
    void set_extra(std::string key, std::string json_value);

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Parses one record. `where` prefixes error messages (e.g. "m.jsonl:3").
ManifestEntry parse_manifest_record(std::string_view line, std::string_view where = "manifest");
std::string format_manifest_record(const ManifestEntry& entry);

/// Blank lines are skipped. Errors carry the file name and line number.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::vector<ManifestEntry> parse_manifest(std::string_view text, std::string_view name = "manifest");
std::string format_manifest(const std::vector<ManifestEntry>& entries);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// Relative audio paths are resolved against the manifest's directory.
std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_path, const ManifestEntry& entry);
std::filesystem::path resolve_audio_path(const std::filesystem::path& base_dir, std::string_view audio_path);

}  // namespace aes
