#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "dlf/net/model.hpp"

namespace dlf::net {

inline constexpr char kCheckpointMagic[8] = {'D', 'L', 'F', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Manifest {
    ModelConfig model;
    int stage = 0;          // 0 = pretrain, 1 = latent alignment, 2 = pixel fine-tune
    int lambda_index = 0;   // written into every container encoded with this checkpoint
    double lambda = 0.0;
    std::int64_t step = 0;
    nlohmann::json extra = nlohmann::json::object();  // free-form training metadata

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
};

struct Checkpoint {
    Manifest manifest;
    DLFModel model{nullptr};
};

// Layout (little endian):
//   magic "DLFCKPT\0", u32 version, u32 manifest length, manifest JSON,
//   u32 tensor count, then per tensor: u16 name length, name, u8 dtype
//   (0 = f32, 1 = f64, 2 = i64), u8 rank, u64 dims[rank], raw data.
// The write is atomic (temp file + rename).
void save_checkpoint(const std::filesystem::path& path, DLFModel& model, const Manifest& manifest);

// Rebuilds the model from the manifest and loads every tensor. Missing,
// unexpected or mis-shaped tensors and a config-hash mismatch raise
// checkpoint_mismatch; malformed files raise format/length/version errors.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Reads only the manifest.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace dlf::net
