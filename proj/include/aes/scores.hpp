#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace aes {

/// The four aesthetic axes, in storage order.
enum class Axis : std::size_t { PQ = 0, PC = 1, CE = 2, CU = 3 };

inline constexpr std::size_t kNumAxes = 4;
inline constexpr std::array<Axis, kNumAxes> kAllAxes{Axis::PQ, Axis::PC, Axis::CE, Axis::CU};

/// Upper-case display name ("PQ").
std::string_view axis_name(Axis axis) noexcept;
/// Lower-case record key ("pq").
std::string_view axis_key(Axis axis) noexcept;
/// Accepts "PQ"/"pq" etc.
std::optional<Axis> parse_axis(std::string_view text) noexcept;

constexpr std::size_t index(Axis axis) noexcept { return static_cast<std::size_t>(axis); }

/// Production Quality, Production Complexity, Content Enjoyment, Content
/// Usefulness. Used both for labels (1..10) and raw predictions.
struct AesScores {
    double pq = 0.0;
    double pc = 0.0;
    double ce = 0.0;
    double cu = 0.0;

    double& operator[](Axis axis) noexcept;
    double operator[](Axis axis) const noexcept;

    std::array<double, kNumAxes> to_array() const noexcept { return {pq, pc, ce, cu}; }
    static AesScores from_array(const std::array<double, kNumAxes>& a) noexcept {
        return {a[0], a[1], a[2], a[3]};
    }

    bool all_finite() const noexcept;
    /// True when every axis lies in the label range [1, 10].
    bool in_label_range() const noexcept;

    friend bool operator==(const AesScores&, const AesScores&) = default;
};

inline constexpr double kLabelMin = 1.0;
inline constexpr double kLabelMax = 10.0;

}  // namespace aes
