#include "aes/manifest.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "aes/error.hpp"
#include "aes/fileio.hpp"

namespace aes {

using nlohmann::ordered_json;

bool ManifestEntry::has_all_scores() const noexcept {
    return std::all_of(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); });
}

AesScores ManifestEntry::require_scores() const {
    AesScores out;
    for (Axis a : kAllAxes) {
        if (!has_score(a))
            fail(ErrorKind::Data, "record '" + audio_path + "' has no " + std::string(axis_name(a)) + " score");
        out[a] = *scores[index(a)];
    }
    return out;
}

void ManifestEntry::set_scores(const AesScores& s) {
    for (Axis a : kAllAxes) scores[index(a)] = s[a];
}

std::optional<std::string> ManifestEntry::extra_field(std::string_view key) const {
    for (const auto& [k, v] : extra)
        if (k == key) return v;
    return std::nullopt;
}

void ManifestEntry::set_extra(std::string key, std::string json_value) {
    for (auto& [k, v] : extra) {
        if (k == key) {
            v = std::move(json_value);
            return;
        }
    }
    extra.emplace_back(std::move(key), std::move(json_value));
}

namespace {

std::optional<std::string> optional_string(const ordered_json& value, std::string_view key, std::string_view where) {
    if (value.is_null()) return std::nullopt;
    if (!value.is_string()) fail(ErrorKind::Format, std::string(where) + ": field '" + std::string(key) + "' must be a string");
    return value.get<std::string>();
}

}  // namespace

ManifestEntry parse_manifest_record(std::string_view line, std::string_view where) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string(where) + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::Format, std::string(where) + ": record must be a JSON object");

    ManifestEntry entry;
    bool have_path = false;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const ordered_json& v = it.value();
        if (key == "schema_version") {
            if (!v.is_number_integer()) fail(ErrorKind::Format, std::string(where) + ": schema_version must be an integer");
            if (v.get<int>() > kSchemaVersion)
                fail(ErrorKind::Format, std::string(where) + ": unsupported schema_version " + v.dump());
        } else if (key == "audio_path") {
            auto p = optional_string(v, key, where);
            if (!p || p->empty()) fail(ErrorKind::Data, std::string(where) + ": audio_path must be non-empty");
            entry.audio_path = *p;
            have_path = true;
        } else if (key == "caption") {
            entry.caption = optional_string(v, key, where);
        } else if (key == "system_id") {
            if (v.is_number()) entry.system_id = v.dump();
            else entry.system_id = optional_string(v, key, where);
        } else if (key == "modality") {
            entry.modality = optional_string(v, key, where);
        } else if (auto axis = parse_axis(key); axis && key == axis_key(*axis)) {
            if (v.is_null()) continue;
            if (!v.is_number()) fail(ErrorKind::Format, std::string(where) + ": score '" + key + "' must be a number");
            const double s = v.get<double>();
            if (!std::isfinite(s)) fail(ErrorKind::Data, std::string(where) + ": score '" + key + "' is not finite");
            entry.scores[index(*axis)] = s;
        } else {
            entry.extra.emplace_back(key, v.dump());
        }
    }
    if (!have_path) fail(ErrorKind::Data, std::string(where) + ": record has no audio_path");
    return entry;
}

std::string format_manifest_record(const ManifestEntry& entry) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["audio_path"] = entry.audio_path;
    if (entry.caption) j["caption"] = *entry.caption;
    for (Axis a : kAllAxes)
        if (entry.has_score(a)) j[std::string(axis_key(a))] = *entry.scores[index(a)];
    if (entry.system_id) j["system_id"] = *entry.system_id;
    if (entry.modality) j["modality"] = *entry.modality;
    for (const auto& [k, v] : entry.extra) j[k] = ordered_json::parse(v);
    return j.dump();
}

std::vector<ManifestEntry> parse_manifest(std::string_view text, std::string_view name) {
    std::vector<ManifestEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") != std::string_view::npos)
            out.push_back(parse_manifest_record(line, std::string(name) + ":" + std::to_string(line_no)));
        pos = end + 1;
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_file(path), path.string());
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const ManifestEntry& e : entries) {
        out += format_manifest_record(e);
        out += '\n';
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    write_file_atomic(path, format_manifest(entries));
}

std::filesystem::path resolve_audio_path(const std::filesystem::path& base_dir, std::string_view audio_path) {
    std::filesystem::path p(audio_path);
    if (p.is_absolute() || base_dir.empty()) return p;
    return base_dir / p;
}

std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_path, const ManifestEntry& entry) {
    return resolve_audio_path(manifest_path.parent_path(), entry.audio_path);
}

}  // namespace aes
