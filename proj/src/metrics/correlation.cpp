#include <algorithm>
#include <cmath>
#include <numeric>

#include "aes/error.hpp"
#include "aes/metrics.hpp"
#include "aes/rng.hpp"

namespace aes::metrics {

namespace {

void require_pairable(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        fail(ErrorKind::Data, "correlation inputs differ in length (" + std::to_string(x.size()) + " vs " +
                                  std::to_string(y.size()) + ")");
    if (x.size() < 2) fail(ErrorKind::Data, "correlation needs at least 2 points");
}

std::vector<double> column(std::span<const AesScores> rows, Axis axis) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const AesScores& s : rows) out.push_back(s[axis]);
    return out;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    require_pairable(x, y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0)) fail(ErrorKind::Data, "undefined correlation: first argument has zero variance");
    if (!(syy > 0.0)) fail(ErrorKind::Data, "undefined correlation: second argument has zero variance");
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        // positions i..j-1 hold ranks i+1..j
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    require_pairable(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) fail(ErrorKind::Data, "percentile of an empty set");
    if (!(p >= 0.0 && p <= 100.0)) fail(ErrorKind::Usage, "percentile must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

AxisValues utt_pcc(std::span<const AesScores> pred, std::span<const AesScores> truth) {
    if (pred.size() != truth.size()) fail(ErrorKind::Data, "prediction and label lists differ in length");
    AxisValues out{};
    for (Axis a : kAllAxes) out[index(a)] = pearson(column(pred, a), column(truth, a));
    return out;
}

std::map<std::string, double> system_means(std::span<const SystemScore> scores) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const SystemScore& s : scores) {
        auto& [sum, n] = acc[s.system_id];
        sum += s.score;
        ++n;
    }
    std::map<std::string, double> out;
    for (const auto& [id, v] : acc) out[id] = v.first / static_cast<double>(v.second);
    return out;
}

double sys_srcc(std::span<const SystemScore> pred, std::span<const SystemScore> truth) {
    const auto pm = system_means(pred);
    const auto tm = system_means(truth);
    if (pm.size() != tm.size() ||
        !std::equal(pm.begin(), pm.end(), tm.begin(), [](const auto& a, const auto& b) { return a.first == b.first; }))
        fail(ErrorKind::Data, "predictions and labels cover different system sets");
    if (pm.size() < 2) fail(ErrorKind::Data, "system-level correlation needs at least 2 systems");
    std::vector<double> x, y;
    for (const auto& [id, v] : pm) {
        x.push_back(v);
        y.push_back(tm.at(id));
    }
    return spearman(x, y);
}

AxisMatrix axis_correlation_matrix(std::span<const AesScores> labels) {
    AxisMatrix m{};
    std::array<std::vector<double>, kNumAxes> cols;
    for (Axis a : kAllAxes) cols[index(a)] = column(labels, a);
    for (std::size_t i = 0; i < kNumAxes; ++i) {
        m[i][i] = pearson(cols[i], cols[i]);
        for (std::size_t j = i + 1; j < kNumAxes; ++j) m[i][j] = m[j][i] = pearson(cols[i], cols[j]);
    }
    return m;
}

RaterDecision rater_qualify(std::span<const double> rater, std::span<const double> golden, double threshold) {
    require_pairable(rater, golden);
    RaterDecision d;
    if (std::all_of(rater.begin(), rater.end(), [&](double v) { return v == rater[0]; })) {
        d.reason = "zero-variance rater answers";
        return d;
    }
    d.r = pearson(rater, golden);
    d.pass = d.r > threshold;
    if (!d.pass) d.reason = "correlation not above threshold";
    return d;
}

RaterAxesDecision rater_qualify_axes(std::span<const AesScores> rater, std::span<const AesScores> golden,
                                     double threshold) {
    if (rater.size() != golden.size()) fail(ErrorKind::Data, "rater and golden sets differ in length");
    RaterAxesDecision d;
    d.pq = rater_qualify(column(rater, Axis::PQ), column(golden, Axis::PQ), threshold);
    d.pc = rater_qualify(column(rater, Axis::PC), column(golden, Axis::PC), threshold);
    d.pass = d.pq.pass && d.pc.pass;
    return d;
}

PairwiseResult bootstrap_net_win(std::span<const int> votes, std::size_t n_resamples, std::uint64_t seed) {
    if (votes.empty()) fail(ErrorKind::Data, "no pairwise votes");
    if (n_resamples == 0) fail(ErrorKind::Usage, "bootstrap needs at least one resample");
    for (int v : votes)
        if (v < -1 || v > 1) fail(ErrorKind::Data, "votes must be -1, 0 or +1");

    const auto n = static_cast<double>(votes.size());
    auto rate = [n](long long sum) { return 100.0 * static_cast<double>(sum) / n; };

    PairwiseResult out;
    out.n_pairs = votes.size();
    out.n_resamples = n_resamples;
    out.net_win_rate = rate(std::accumulate(votes.begin(), votes.end(), 0LL));

    std::vector<double> means(n_resamples);
    for (std::size_t r = 0; r < n_resamples; ++r) {
        auto g = make_stream(seed, {tag(StreamTag::Bootstrap), r});
        long long sum = 0;
        for (std::size_t k = 0; k < votes.size(); ++k) sum += votes[uniform_index(g, votes.size())];
        means[r] = rate(sum);
    }
    // A heavily skewed resample distribution can leave the observed rate just
    // outside the percentile interval; widen to include it.
    out.ci_low = std::min(percentile(means, 2.5), out.net_win_rate);
    out.ci_high = std::max(percentile(means, 97.5), out.net_win_rate);
    return out;
}

}  // namespace aes::metrics
