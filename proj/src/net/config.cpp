#include "dlf/net/config.hpp"

#include "dlf/error.hpp"

namespace dlf::net {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_interactive: return "no_interactive";
        case Variant::no_detail: return "no_detail";
        case Variant::vq_detail: return "vq_detail";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    for (auto v : {Variant::full, Variant::no_interactive, Variant::no_detail, Variant::vq_detail})
        if (name == to_string(v)) return v;
    fail(ErrorKind::config, "unknown variant '" + name + "'");
}

void ModelConfig::validate() const {
    auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::config, what); };
    check(embed_dim > 0 && detail_dim > 0, "embed_dim and detail_dim must be positive");
    check(heads > 0 && embed_dim % heads == 0, "embed_dim must be divisible by heads");
    check(window >= 2 && window % 2 == 0, "window must be even and >= 2");
    check(tokens >= 1, "tokens must be >= 1");
    check(stages >= 1, "stages must be >= 1");
    check(detail_window >= 1 && window % detail_window == 0, "detail_window must divide window");
    check(mlp_ratio >= 1, "mlp_ratio must be >= 1");
    check(codebook_size >= 1 && detail_codebook_size >= 1, "codebook sizes must be >= 1");
    check(symbol_max >= 1 && symbol_max <= 32767, "symbol_max out of range");
    check(context_channels >= 1, "context_channels must be >= 1");
    check(generator_channels.size() == 4, "generator_channels needs 4 entries (one per 2x upsampling)");
    for (int c : generator_channels) check(c >= 1, "generator channels must be positive");
    check(kept_tokens >= 0 && kept_tokens <= tokens, "kept_tokens must be in [0, tokens]");
    check(kept_tokens == 0 || variant == Variant::no_detail, "kept_tokens is only used by no_detail");
}

const std::set<std::string>& ModelConfig::keys() {
    static const std::set<std::string> k = {
        "model.embed_dim",     "model.detail_dim",           "model.window",        "model.tokens",
        "model.stages",        "model.heads",                "model.detail_window", "model.mlp_ratio",
        "model.it_ffn",        "model.codebook_size",        "model.symbol_max",    "model.context_channels",
        "model.generator_channels", "model.detail_codebook_size", "model.kept_tokens", "model.variant"};
    return k;
}

ModelConfig ModelConfig::from_keys(const io::KeyValueConfig& cfg, const ModelConfig& base) {
    ModelConfig m = base;
    auto get = [&](const char* key, int fallback) { return static_cast<int>(cfg.get_int(key, fallback)); };
    m.embed_dim = get("model.embed_dim", m.embed_dim);
    m.detail_dim = get("model.detail_dim", m.detail_dim);
    m.window = get("model.window", m.window);
    m.tokens = get("model.tokens", m.tokens);
    m.stages = get("model.stages", m.stages);
    m.heads = get("model.heads", m.heads);
    m.detail_window = get("model.detail_window", m.detail_window);
    m.mlp_ratio = get("model.mlp_ratio", m.mlp_ratio);
    m.it_ffn = cfg.get_bool("model.it_ffn", m.it_ffn);
    m.codebook_size = static_cast<std::uint32_t>(cfg.get_int("model.codebook_size", m.codebook_size));
    m.detail_codebook_size =
        static_cast<std::uint32_t>(cfg.get_int("model.detail_codebook_size", m.detail_codebook_size));
    m.symbol_max = get("model.symbol_max", m.symbol_max);
    m.context_channels = get("model.context_channels", m.context_channels);
    m.generator_channels = cfg.get_ints("model.generator_channels", m.generator_channels);
    m.kept_tokens = get("model.kept_tokens", m.kept_tokens);
    if (cfg.has("model.variant")) m.variant = parse_variant(cfg.get_string("model.variant", ""));
    return m;
}

nlohmann::json ModelConfig::to_json() const {
    return {{"embed_dim", embed_dim},
            {"detail_dim", detail_dim},
            {"window", window},
            {"tokens", tokens},
            {"stages", stages},
            {"heads", heads},
            {"detail_window", detail_window},
            {"mlp_ratio", mlp_ratio},
            {"it_ffn", it_ffn},
            {"codebook_size", codebook_size},
            {"detail_codebook_size", detail_codebook_size},
            {"symbol_max", symbol_max},
            {"context_channels", context_channels},
            {"generator_channels", generator_channels},
            {"variant", to_string(variant)},
            {"kept_tokens", kept_tokens}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig m;
    try {
        m.embed_dim = j.at("embed_dim");
        m.detail_dim = j.at("detail_dim");
        m.window = j.at("window");
        m.tokens = j.at("tokens");
        m.stages = j.at("stages");
        m.heads = j.at("heads");
        m.detail_window = j.at("detail_window");
        m.mlp_ratio = j.at("mlp_ratio");
        m.it_ffn = j.at("it_ffn");
        m.codebook_size = j.at("codebook_size");
        m.detail_codebook_size = j.at("detail_codebook_size");
        m.symbol_max = j.at("symbol_max");
        m.context_channels = j.at("context_channels");
        m.generator_channels = j.at("generator_channels").get<std::vector<int>>();
        m.variant = parse_variant(j.at("variant").get<std::string>());
        m.kept_tokens = j.at("kept_tokens");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("model config: ") + e.what());
    }
    m.validate();
    return m;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t ModelConfig::hash() const {
    auto j = to_json();
    j.erase("kept_tokens");
    return fnv1a64(j.dump());
}

}  // namespace dlf::net
