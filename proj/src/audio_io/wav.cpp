#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "aes/audio_io.hpp"
#include "aes/error.hpp"

namespace aes::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

std::uint16_t read_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct FormatChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorKind::Io, "read error on '" + path.string() + "'");
    return bytes;
}

}  // namespace

void validate(const AudioClip& clip) {
    if (clip.sample_rate <= 0) fail(ErrorKind::Data, "audio clip has non-positive sample rate");
    if (clip.channels < 1) fail(ErrorKind::Data, "audio clip has no channels");
    if (clip.samples.size() % static_cast<std::size_t>(clip.channels) != 0)
        fail(ErrorKind::Data, "audio clip sample count is not a multiple of the channel count");
}

AudioClip load_wav(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = slurp(path);
    const std::string where = " in '" + path.string() + "'";

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        fail(ErrorKind::Format, "not a RIFF/WAVE file" + where);

    std::optional<FormatChunk> fmt;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;

        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || available < 16) fail(ErrorKind::Truncated, "fmt chunk too short" + where);
            FormatChunk f;
            f.format = read_u16(chunk + 8);
            f.channels = read_u16(chunk + 10);
            f.sample_rate = read_u32(chunk + 12);
            f.block_align = read_u16(chunk + 20);
            f.bits = read_u16(chunk + 22);
            if (f.format == kFormatExtensible) {
                if (size < 40 || available < 40) fail(ErrorKind::Truncated, "extensible fmt chunk too short" + where);
                // First two bytes of the SubFormat GUID carry the actual format tag.
                f.format = read_u16(chunk + 8 + 24);
            }
            fmt = f;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (size > available)
                fail(ErrorKind::Truncated, "data chunk declares " + std::to_string(size) + " bytes but only " +
                                               std::to_string(available) + " remain" + where);
            data = chunk + 8;
            data_size = size;
            break;
        }
        pos = body + size + (size & 1u);
    }

    if (!fmt) fail(ErrorKind::Format, "missing fmt chunk" + where);
    if (!data) fail(ErrorKind::Format, "missing data chunk" + where);

    const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
    const bool pcm24 = fmt->format == kFormatPcm && fmt->bits == 24;
    const bool f32 = fmt->format == kFormatFloat && fmt->bits == 32;
    if (!pcm16 && !pcm24 && !f32)
        fail(ErrorKind::UnsupportedCodec, "unsupported sample format (tag " + std::to_string(fmt->format) + ", " +
                                              std::to_string(fmt->bits) + " bits)" + where);
    if (fmt->channels == 0 || fmt->sample_rate == 0) fail(ErrorKind::Format, "invalid channel count or sample rate" + where);

    const std::size_t bytes_per_sample = fmt->bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
    if (data_size % frame_bytes != 0) fail(ErrorKind::Truncated, "data chunk ends inside a sample frame" + where);

    AudioClip clip;
    clip.sample_rate = static_cast<int>(fmt->sample_rate);
    clip.channels = fmt->channels;
    const std::size_t n = data_size / bytes_per_sample;
    clip.samples.resize(n);

    if (pcm16) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = static_cast<std::int16_t>(read_u16(data + 2 * i));
            clip.samples[i] = static_cast<float>(v / 32768.0);
        }
    } else if (pcm24) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t* p = data + 3 * i;
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v -= 0x1000000;
            clip.samples[i] = static_cast<float>(v / 8388608.0);
        }
    } else {
        std::memcpy(clip.samples.data(), data, n * sizeof(float));
    }
    return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    validate(clip);
    const std::size_t data_bytes = clip.samples.size() * sizeof(float);
    if (data_bytes > 0xFFFFFFFFull - 44) fail(ErrorKind::Data, "clip too large for a RIFF/WAVE file");

    std::string out;
    out.reserve(44 + data_bytes);
    out.append("RIFF");
    put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
    out.append("WAVEfmt ");
    put_u32(out, 16);
    put_u16(out, kFormatFloat);
    put_u16(out, static_cast<std::uint16_t>(clip.channels));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate * clip.channels * 4));
    put_u16(out, static_cast<std::uint16_t>(clip.channels * 4));
    put_u16(out, 32);
    out.append("data");
    put_u32(out, static_cast<std::uint32_t>(data_bytes));

    const std::size_t header = out.size();
    out.resize(header + data_bytes);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const float v = std::clamp(clip.samples[i], -1.0f, 1.0f);
        std::memcpy(out.data() + header + 4 * i, &v, sizeof v);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot create '" + path.string() + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(ErrorKind::Io, "write error on '" + path.string() + "'");
}

}  // namespace aes::audio
