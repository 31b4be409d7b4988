#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "aes/model.hpp"

namespace aes::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Adam first/second moments plus the index of the last completed step.
struct AdamState {
    ParamBuffer m;
    ParamBuffer v;
    std::int64_t step = 0;

    static AdamState zeros_like(const ParamBuffer& params) { return {params.zeros_like(), params.zeros_like(), 0}; }
};

struct Checkpoint {
    ModelParams params;
    std::optional<AdamState> optimizer;
};

/// Serialized container, see docs/checkpoint-format.md.
std::string serialize_checkpoint(const ModelParams& params, const AdamState* optimizer = nullptr);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const AdamState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace aes::model
