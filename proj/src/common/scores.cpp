#include "aes/scores.hpp"

#include <cmath>

#include "aes/error.hpp"

namespace aes {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Io: return "io";
    case ErrorKind::UnsupportedCodec: return "unsupported-codec";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::Format: return "format";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numerical: return "numerical";
    }
    return "unknown";
}

std::string_view axis_name(Axis axis) noexcept {
    switch (axis) {
    case Axis::PQ: return "PQ";
    case Axis::PC: return "PC";
    case Axis::CE: return "CE";
    case Axis::CU: return "CU";
    }
    return "?";
}

std::string_view axis_key(Axis axis) noexcept {
    switch (axis) {
    case Axis::PQ: return "pq";
    case Axis::PC: return "pc";
    case Axis::CE: return "ce";
    case Axis::CU: return "cu";
    }
    return "?";
}

std::optional<Axis> parse_axis(std::string_view text) noexcept {
    for (Axis a : kAllAxes) {
        if (text == axis_name(a) || text == axis_key(a)) return a;
    }
    return std::nullopt;
}

double& AesScores::operator[](Axis axis) noexcept {
    switch (axis) {
    case Axis::PQ: return pq;
    case Axis::PC: return pc;
    case Axis::CE: return ce;
    case Axis::CU: break;
    }
    return cu;
}

double AesScores::operator[](Axis axis) const noexcept {
    return const_cast<AesScores&>(*this)[axis];
}

bool AesScores::all_finite() const noexcept {
    return std::isfinite(pq) && std::isfinite(pc) && std::isfinite(ce) && std::isfinite(cu);
}

bool AesScores::in_label_range() const noexcept {
    for (double v : to_array()) {
        if (!(v >= kLabelMin && v <= kLabelMax)) return false;
    }
    return true;
}

}  // namespace aes
