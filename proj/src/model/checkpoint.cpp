#include "aes/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>
#include <zlib.h>

#include "aes/error.hpp"
#include "aes/fileio.hpp"

namespace aes::model {

namespace {

constexpr char kMagic[8] = {'A', 'E', 'S', 'M', 'O', 'D', 'E', 'L'};

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

void put_doubles(std::string& out, std::span<const double> values) {
    const std::size_t at = out.size();
    out.resize(at + values.size() * sizeof(double));
    std::memcpy(out.data() + at, values.data(), values.size() * sizeof(double));
}

std::uint32_t crc_of(const char* data, std::size_t size) {
    uLong crc = crc32(0L, Z_NULL, 0);
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
        data += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

nlohmann::json config_to_json(const EncoderConfig& c) {
    return {{"num_layers", c.num_layers},   {"hidden_dim", c.hidden_dim},
            {"num_heads", c.num_heads},     {"ffn_dim", c.ffn_dim},
            {"frame_size", c.frame_size},   {"frame_stride", c.frame_stride},
            {"max_frames", c.max_frames},   {"head_blocks", c.head_blocks},
            {"positional_encoding", c.positional_encoding}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.num_layers = j.at("num_layers").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.ffn_dim = j.at("ffn_dim").get<int>();
    c.frame_size = j.at("frame_size").get<int>();
    c.frame_stride = j.at("frame_stride").get<int>();
    c.max_frames = j.at("max_frames").get<int>();
    c.head_blocks = j.at("head_blocks").get<int>();
    c.positional_encoding = j.at("positional_encoding").get<bool>();
    return c;
}

}  // namespace

std::string serialize_checkpoint(const ModelParams& params, const AdamState* optimizer) {
    const ParamLayout& layout = params.weights.layout();
    nlohmann::json header;
    header["format"] = "aes-checkpoint";
    header["config"] = config_to_json(params.config);
    header["param_count"] = layout.total_size();
    nlohmann::json slots = nlohmann::json::array();
    for (const ParamSlot& s : layout.slots()) slots.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
    header["arrays"] = std::move(slots);
    header["has_optimizer_state"] = optimizer != nullptr;
    header["optimizer_step"] = optimizer ? optimizer->step : 0;
    const std::string header_text = header.dump();

    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    put_doubles(out, params.weights.flat());
    put_doubles(out, params.normalizer.mean);
    put_doubles(out, params.normalizer.stddev);
    if (optimizer) {
        put_doubles(out, optimizer->m.flat());
        put_doubles(out, optimizer->v.flat());
    }
    put_u32(out, crc_of(out.data(), out.size()));
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    constexpr std::size_t kPrefix = sizeof kMagic + 8;
    if (bytes.size() < kPrefix + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        fail(ErrorKind::Format, "not an AES checkpoint");
    const std::uint32_t version = get_u32(bytes, sizeof kMagic);
    if (version != kCheckpointVersion)
        fail(ErrorKind::Format, "unsupported checkpoint version " + std::to_string(version));

    const std::size_t body = bytes.size() - 4;
    if (crc_of(bytes.data(), body) != get_u32(bytes, body)) fail(ErrorKind::Format, "checkpoint checksum mismatch");

    const std::uint32_t header_len = get_u32(bytes, sizeof kMagic + 4);
    if (kPrefix + header_len > body) fail(ErrorKind::Truncated, "checkpoint header exceeds file size");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + kPrefix, bytes.begin() + static_cast<long>(kPrefix + header_len));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("bad checkpoint header: ") + e.what());
    }

    Checkpoint ckpt;
    bool has_optimizer = false;
    std::int64_t step = 0;
    std::size_t param_count = 0;
    try {
        ckpt.params.config = config_from_json(header.at("config"));
        param_count = header.at("param_count").get<std::size_t>();
        has_optimizer = header.at("has_optimizer_state").get<bool>();
        step = header.at("optimizer_step").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("bad checkpoint header: ") + e.what());
    }

    auto layout = std::make_shared<const ParamLayout>(ckpt.params.config);
    if (layout->total_size() != param_count) fail(ErrorKind::Format, "checkpoint parameter count does not match its config");
    const auto& arrays = header.at("arrays");
    if (!arrays.is_array() || arrays.size() != layout->slots().size())
        fail(ErrorKind::Format, "checkpoint array table does not match its config");
    for (std::size_t i = 0; i < arrays.size(); ++i) {
        const ParamSlot& s = layout->slots()[i];
        if (arrays[i].value("name", "") != s.name || arrays[i].value("rows", 0u) != s.rows ||
            arrays[i].value("cols", 0u) != s.cols)
            fail(ErrorKind::Format, "checkpoint array " + std::to_string(i) + " does not match layout slot " + s.name);
    }

    const std::size_t doubles = param_count + 2 * kNumAxes + (has_optimizer ? 2 * param_count : 0);
    if (kPrefix + header_len + doubles * sizeof(double) != body)
        fail(ErrorKind::Truncated, "checkpoint payload size does not match its header");

    const char* p = bytes.data() + kPrefix + header_len;
    auto take = [&p](std::span<double> dst) {
        std::memcpy(dst.data(), p, dst.size() * sizeof(double));
        p += dst.size() * sizeof(double);
    };
    ckpt.params.weights = ParamBuffer(layout);
    take(ckpt.params.weights.flat());
    take(ckpt.params.normalizer.mean);
    take(ckpt.params.normalizer.stddev);
    for (double sd : ckpt.params.normalizer.stddev)
        if (!(sd > 0.0)) fail(ErrorKind::Format, "checkpoint normalizer has non-positive std");
    if (has_optimizer) {
        AdamState opt = AdamState::zeros_like(ckpt.params.weights);
        take(opt.m.flat());
        take(opt.v.flat());
        opt.step = step;
        ckpt.optimizer = std::move(opt);
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const AdamState* optimizer) {
    write_file_atomic(path, serialize_checkpoint(params, optimizer));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace aes::model
