#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "aes/synthdata.hpp"

namespace aes::synth {

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* input() { return in_; }
    /// |X_k|^2 for k = 0..n/2.
    void power(std::vector<double>& out) {
        fftw_execute(plan_);
        out.resize(n_ / 2 + 1);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }

private:
    std::size_t n_;
    double* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

std::vector<double> power_spectrum(std::span<const float> mono) {
    if (mono.empty()) return {};
    const std::size_t n = next_pow2(mono.size());
    RealFft fft(n);
    double* in = fft.input();
    const double m = static_cast<double>(mono.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= mono.size()) {
            in[i] = 0.0;
            continue;
        }
        const double x = 2.0 * std::numbers::pi * static_cast<double>(i) / std::max(m - 1.0, 1.0);
        const double w = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
        in[i] = w * mono[i];
    }
    std::vector<double> p;
    fft.power(p);
    return p;
}

std::size_t count_spectral_peaks(std::span<const float> mono, double floor_db, std::size_t min_separation_bins) {
    const auto p = power_spectrum(mono);
    if (p.size() < 3) return 0;
    const double top = *std::max_element(p.begin(), p.end());
    if (!(top > 0.0)) return 0;
    const double floor = top * std::pow(10.0, floor_db / 10.0);
    std::size_t count = 0;
    std::size_t last = 0;
    bool have_last = false;
    for (std::size_t k = 1; k + 1 < p.size(); ++k) {
        if (p[k] < floor || p[k] < p[k - 1] || p[k] < p[k + 1]) continue;
        if (have_last && k - last < min_separation_bins) continue;
        ++count;
        last = k;
        have_last = true;
    }
    return count;
}

double spectral_flatness(std::span<const float> mono) {
    const auto p = power_spectrum(mono);
    if (p.empty()) return 0.0;
    constexpr double kFloor = 1e-20;
    double log_sum = 0.0, sum = 0.0;
    for (double v : p) {
        log_sum += std::log(v + kFloor);
        sum += v + kFloor;
    }
    const double n = static_cast<double>(p.size());
    return std::exp(log_sum / n) / (sum / n);
}

std::size_t count_onsets(std::span<const float> mono, int sample_rate) {
    const auto frame = next_pow2(static_cast<std::size_t>(0.032 * sample_rate));
    const auto hop = static_cast<std::size_t>(0.010 * sample_rate);
    if (mono.empty() || hop == 0) return 0;

    RealFft fft(frame);
    std::vector<double> window(frame);
    for (std::size_t i = 0; i < frame; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(frame));

    std::vector<double> flux;
    std::vector<double> prev, cur, power;
    for (std::size_t start = 0; start < mono.size(); start += hop) {
        double* in = fft.input();
        for (std::size_t i = 0; i < frame; ++i) in[i] = start + i < mono.size() ? window[i] * mono[start + i] : 0.0;
        fft.power(power);
        cur.resize(power.size());
        for (std::size_t k = 0; k < power.size(); ++k) cur[k] = std::log1p(100.0 * std::sqrt(power[k]));
        double f = 0.0;
        for (std::size_t k = 0; k < cur.size(); ++k) f += std::max(0.0, cur[k] - (prev.empty() ? 0.0 : prev[k]));
        flux.push_back(f);
        std::swap(prev, cur);
    }

    const double top = *std::max_element(flux.begin(), flux.end());
    if (!(top > 0.0)) return 0;
    const double threshold = 0.1 * top;
    constexpr std::size_t kNeighborhood = 3;
    std::size_t count = 0;
    for (std::size_t t = 0; t < flux.size(); ++t) {
        if (flux[t] < threshold) continue;
        bool is_peak = true;
        for (std::size_t u = t >= kNeighborhood ? t - kNeighborhood : 0; u <= std::min(flux.size() - 1, t + kNeighborhood); ++u) {
            if (u == t) continue;
            if (flux[u] > flux[t] || (u < t && flux[u] == flux[t])) {
                is_peak = false;
                break;
            }
        }
        if (is_peak) ++count;
    }
    return count;
}

}  // namespace aes::synth
