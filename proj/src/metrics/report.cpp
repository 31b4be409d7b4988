#include <charconv>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "aes/error.hpp"
#include "aes/fileio.hpp"
#include "aes/metrics.hpp"

namespace aes::metrics {

namespace {

std::optional<double> try_correlation(double (*fn)(std::span<const double>, std::span<const double>),
                                      const std::vector<double>& x, const std::vector<double>& y) {
    try {
        return fn(x, y);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Data) throw;
        return std::nullopt;
    }
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt("%.6f", *v) : "undefined"; }

void append_matrix(std::string& out, const char* title, const AxisMatrix& m) {
    out += title;
    out += "\n      PQ        PC        CE        CU\n";
    for (Axis r : kAllAxes) {
        out += std::string(axis_name(r));
        for (Axis c : kAllAxes) out += " " + fmt("%9.6f", m[index(r)][index(c)]);
        out += '\n';
    }
}

}  // namespace

EvalReport evaluate(std::span<const ManifestEntry> predictions, std::span<const ManifestEntry> labels,
                    const EvalOptions& options) {
    std::unordered_map<std::string, const ManifestEntry*> by_path;
    for (const ManifestEntry& l : labels)
        if (!by_path.emplace(l.audio_path, &l).second)
            fail(ErrorKind::Data, "duplicate label record for '" + l.audio_path + "'");

    EvalReport report;
    report.n_pred = predictions.size();
    report.n_labels = labels.size();

    std::vector<std::pair<const ManifestEntry*, const ManifestEntry*>> matched;
    for (const ManifestEntry& p : predictions) {
        auto it = by_path.find(p.audio_path);
        if (it != by_path.end()) matched.emplace_back(&p, it->second);
    }
    report.n_matched = matched.size();

    for (Axis a : kAllAxes) {
        std::vector<double> x, y;
        bool complete = !matched.empty();
        for (const auto& [p, l] : matched) {
            if (!p->has_score(a) || !l->has_score(a)) {
                complete = false;
                break;
            }
            x.push_back(*p->scores[index(a)]);
            y.push_back(*l->scores[index(a)]);
        }
        if (complete) report.utt_pcc[index(a)] = try_correlation(&pearson, x, y);
    }

    if (options.per_system) {
        std::map<std::string, std::size_t> counts;
        std::array<std::vector<SystemScore>, kNumAxes> ps, ls;
        for (const auto& [p, l] : matched) {
            const auto& sid = l->system_id ? l->system_id : p->system_id;
            if (!sid) fail(ErrorKind::Data, "record '" + l->audio_path + "' has no system_id");
            ++counts[*sid];
            for (Axis a : kAllAxes) {
                if (!p->has_score(a) || !l->has_score(a)) continue;
                ps[index(a)].push_back({*sid, *p->scores[index(a)]});
                ls[index(a)].push_back({*sid, *l->scores[index(a)]});
            }
        }
        report.n_systems = counts.size();
        for (Axis a : kAllAxes) {
            const std::size_t i = index(a);
            if (ps[i].size() != matched.size() || matched.empty()) continue;
            const auto pm = system_means(ps[i]);
            const auto lm = system_means(ls[i]);
            for (const auto& [id, v] : pm) {
                report.per_system[id].first[i] = v;
                report.per_system[id].second[i] = lm.at(id);
            }
            if (pm.size() >= 2) {
                std::vector<double> x, y;
                for (const auto& [id, v] : pm) {
                    x.push_back(v);
                    y.push_back(lm.at(id));
                }
                report.sys_srcc[i] = try_correlation(&spearman, x, y);
            }
        }
    }

    if (options.axis_matrix) {
        std::vector<AesScores> lab, pre;
        bool complete = true;
        for (const auto& [p, l] : matched) {
            if (!p->has_all_scores() || !l->has_all_scores()) {
                complete = false;
                break;
            }
            pre.push_back(p->require_scores());
            lab.push_back(l->require_scores());
        }
        if (complete && matched.size() >= 2) {
            try {
                report.label_axis_matrix = axis_correlation_matrix(lab);
                report.pred_axis_matrix = axis_correlation_matrix(pre);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Data) throw;
            }
        }
    }
    return report;
}

std::string format_eval_report(const EvalReport& r) {
    std::string out;
    out += "matched " + std::to_string(r.n_matched) + " of " + std::to_string(r.n_pred) + " predictions (" +
           std::to_string(r.n_labels) + " labels)\n";
    out += "utt-PCC ";
    for (Axis a : kAllAxes) out += " " + std::string(axis_name(a)) + " " + fmt_opt(r.utt_pcc[index(a)]);
    out += '\n';
    if (r.n_systems > 0) {
        out += "sys-SRCC";
        for (Axis a : kAllAxes) out += " " + std::string(axis_name(a)) + " " + fmt_opt(r.sys_srcc[index(a)]);
        out += "\nsystems " + std::to_string(r.n_systems) + "\n";
        for (const auto& [id, means] : r.per_system) {
            out += "  " + id;
            for (Axis a : kAllAxes)
                out += " " + std::string(axis_name(a)) + " " + fmt("%.4f", means.first[index(a)]) + "/" +
                       fmt("%.4f", means.second[index(a)]);
            out += '\n';
        }
    }
    if (r.label_axis_matrix) append_matrix(out, "label axis correlation (Pearson)", *r.label_axis_matrix);
    if (r.pred_axis_matrix) append_matrix(out, "prediction axis correlation (Pearson)", *r.pred_axis_matrix);
    return out;
}

std::string format_eval_csv(const EvalReport& r) {
    std::string out = "metric,axis,value\n";
    auto row = [&](const std::string& metric, const std::string& axis, const std::optional<double>& v) {
        out += metric + "," + axis + "," + (v ? fmt("%.17g", *v) : std::string()) + "\n";
    };
    row("n_matched", "", static_cast<double>(r.n_matched));
    for (Axis a : kAllAxes) row("utt_pcc", std::string(axis_name(a)), r.utt_pcc[index(a)]);
    if (r.n_systems > 0)
        for (Axis a : kAllAxes) row("sys_srcc", std::string(axis_name(a)), r.sys_srcc[index(a)]);
    auto matrix_rows = [&](const char* name, const std::optional<AxisMatrix>& m) {
        if (!m) return;
        for (Axis i : kAllAxes)
            for (Axis j : kAllAxes)
                row(name, std::string(axis_name(i)) + "-" + std::string(axis_name(j)), (*m)[index(i)][index(j)]);
    };
    matrix_rows("label_axis_r", r.label_axis_matrix);
    matrix_rows("pred_axis_r", r.pred_axis_matrix);
    return out;
}

RaterAxesDecision qualify_records(std::span<const ManifestEntry> rater, std::span<const ManifestEntry> golden,
                                  double threshold) {
    std::unordered_map<std::string, const ManifestEntry*> answers;
    for (const ManifestEntry& r : rater)
        if (!answers.emplace(r.audio_path, &r).second)
            fail(ErrorKind::Data, "duplicate rater answer for '" + r.audio_path + "'");
    std::vector<AesScores> rs, gs;
    for (const ManifestEntry& g : golden) {
        auto it = answers.find(g.audio_path);
        if (it == answers.end()) fail(ErrorKind::Data, "rater has no answer for golden item '" + g.audio_path + "'");
        AesScores r{}, t{};
        for (Axis a : {Axis::PQ, Axis::PC}) {
            if (!g.has_score(a) || !it->second->has_score(a))
                fail(ErrorKind::Data, "item '" + g.audio_path + "' lacks a " + std::string(axis_name(a)) + " score");
            r[a] = *it->second->scores[index(a)];
            t[a] = *g.scores[index(a)];
        }
        rs.push_back(r);
        gs.push_back(t);
    }
    return rater_qualify_axes(rs, gs, threshold);
}

std::vector<int> read_votes(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::vector<int> votes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Format, where + ": invalid JSON: " + e.what());
        }
        if (j.is_object()) {
            if (!j.contains("vote")) fail(ErrorKind::Format, where + ": record has no 'vote' field");
            j = j["vote"];
        }
        if (!j.is_number_integer()) fail(ErrorKind::Format, where + ": vote must be an integer");
        const long long v = j.get<long long>();
        if (v < -1 || v > 1) fail(ErrorKind::Data, where + ": vote must be -1, 0 or +1");
        votes.push_back(static_cast<int>(v));
    }
    return votes;
}

std::vector<std::pair<std::string, double>> read_score_file(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::vector<std::pair<std::string, double>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto sep = line.find_last_of(",\t ");
        if (sep == std::string::npos)
            fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": expected '<path> <score>'");
        std::string key = line.substr(first, sep - first);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t' || key.back() == ',')) key.pop_back();
        const std::string value = line.substr(sep + 1);
        double score = 0.0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), score);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            if (out.empty() && line_no == 1) continue;  // header row
            fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": score is not a number");
        }
        out.emplace_back(std::move(key), score);
    }
    return out;
}

}  // namespace aes::metrics
