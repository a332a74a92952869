#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlf/io/config.hpp"

namespace dlf::net {

inline constexpr int kPatchSize = 16;

enum class Variant { full, no_interactive, no_detail, vq_detail };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);

// Architecture hyperparameters. `window` is the side of a semantic window in
// grid tokens, so one window covers (16 * window)^2 pixels.
struct ModelConfig {
    int embed_dim = 128;
    int detail_dim = 32;
    int window = 16;
    int tokens = 32;
    int stages = 4;
    int heads = 4;
    int detail_window = 8;
    int mlp_ratio = 4;
    bool it_ffn = true;
    std::uint32_t codebook_size = 4096;
    std::uint32_t detail_codebook_size = 256;  // vq_detail only
    int symbol_max = 127;
    int context_channels = 64;
    std::vector<int> generator_channels = {128, 96, 64, 32};  // coarse to fine
    Variant variant = Variant::full;
    // Tokens per window actually transmitted; 0 means all of them. Only the
    // no_detail variant truncates.
    int kept_tokens = 0;

    int window_pixels() const { return kPatchSize * window; }
    int grid_tokens() const { return window * window; }
    int active_tokens() const { return kept_tokens > 0 ? kept_tokens : tokens; }
    bool uses_interaction() const { return variant != Variant::no_interactive; }
    bool uses_detail() const { return variant != Variant::no_detail; }

    void validate() const;

    // Keys are read with a "model." prefix, e.g. model.embed_dim = 64.
    static ModelConfig from_keys(const io::KeyValueConfig& cfg, const ModelConfig& base);
    static ModelConfig from_keys(const io::KeyValueConfig& cfg) { return from_keys(cfg, ModelConfig{}); }
    static const std::set<std::string>& keys();

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);

    // FNV-1a over the canonical JSON of the architecture fields; kept_tokens
    // is excluded because it does not change the parameter set.
    std::uint64_t hash() const;
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace dlf::net
