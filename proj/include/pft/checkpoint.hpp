#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pft/model.hpp"

namespace pft {

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct Checkpoint {
    ModelState model;
    CheckpointMeta meta;
};

/// Single self-describing file: magic bytes, a JSON metadata header (dims,
/// task list, seed, config hash), then the flat little-endian float64 arrays
/// in declaration order (encoder w1, b1, then each head's w, b in the model's
/// task order). Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ModelState& model,
                     const CheckpointMeta& meta);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pft
