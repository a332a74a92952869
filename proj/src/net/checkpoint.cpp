#include "dlf/net/checkpoint.hpp"

#include <cstring>
#include <map>

#include "dlf/error.hpp"
#include "dlf/io/image.hpp"

namespace dlf::net {

namespace {

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

struct Reader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        require(bytes.size() - pos >= n, ErrorKind::length, "checkpoint truncated at byte " + std::to_string(pos));
    }
    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += sizeof(T);
        return static_cast<T>(v);
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

std::uint8_t dtype_code(torch::Dtype t) {
    switch (t) {
        case torch::kFloat32: return 0;
        case torch::kFloat64: return 1;
        case torch::kInt64: return 2;
        default: fail(ErrorKind::invalid_input, "unsupported tensor dtype in checkpoint");
    }
}

torch::Dtype dtype_of(std::uint8_t code) {
    switch (code) {
        case 0: return torch::kFloat32;
        case 1: return torch::kFloat64;
        case 2: return torch::kInt64;
        default: fail(ErrorKind::format, "unknown tensor dtype code " + std::to_string(code));
    }
}

std::map<std::string, torch::Tensor> state_of(DLFModel& model) {
    std::map<std::string, torch::Tensor> s;
    for (auto& p : model->named_parameters()) s[p.key()] = p.value();
    for (auto& b : model->named_buffers()) s[b.key()] = b.value();
    return s;
}

Manifest parse_header(Reader& r) {
    require(r.bytes.size() >= 8 && std::memcmp(r.bytes.data(), kCheckpointMagic, 8) == 0, ErrorKind::format,
            "not a checkpoint (bad magic)");
    r.pos = 8;
    const auto version = r.get<std::uint32_t>();
    require(version == kCheckpointVersion, ErrorKind::version, "unsupported checkpoint version " + std::to_string(version));
    const auto len = r.get<std::uint32_t>();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(r.str(len));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("checkpoint manifest: ") + e.what());
    }
    return Manifest::from_json(j);
}

}  // namespace

nlohmann::json Manifest::to_json() const {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(model.hash()));
    return {{"model", model.to_json()},
            {"config_hash", hash},
            {"stage", stage},
            {"lambda_index", lambda_index},
            {"lambda", lambda},
            {"codebook_size", model.codebook_size},
            {"variant", to_string(model.variant)},
            {"step", step},
            {"extra", extra}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
    Manifest m;
    try {
        m.model = ModelConfig::from_json(j.at("model"));
        m.stage = j.at("stage");
        m.lambda_index = j.at("lambda_index");
        m.lambda = j.at("lambda");
        m.step = j.at("step");
        if (j.contains("extra")) m.extra = j.at("extra");
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.model.hash()));
        require(j.at("config_hash").get<std::string>() == hash, ErrorKind::checkpoint_mismatch,
                "manifest config hash does not match its model config");
        require(j.at("variant").get<std::string>() == to_string(m.model.variant), ErrorKind::checkpoint_mismatch,
                "manifest variant disagrees with its model config");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("checkpoint manifest: ") + e.what());
    }
    require(m.stage >= 0 && m.stage <= 2, ErrorKind::format, "checkpoint stage out of range");
    require(m.lambda_index >= 0 && m.lambda_index <= 255, ErrorKind::format, "lambda_index out of range");
    return m;
}

void save_checkpoint(const std::filesystem::path& path, DLFModel& model, const Manifest& manifest) {
    std::vector<unsigned char> out(kCheckpointMagic, kCheckpointMagic + 8);
    put<std::uint32_t>(out, kCheckpointVersion);
    const auto text = manifest.to_json().dump();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    const auto state = state_of(model);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(state.size()));
    for (const auto& [name, value] : state) {
        auto t = value.detach().cpu().contiguous();
        put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(dtype_code(t.scalar_type()));
        out.push_back(static_cast<unsigned char>(t.dim()));
        for (auto d : t.sizes()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
        const auto* p = static_cast<const unsigned char*>(t.data_ptr());
        out.insert(out.end(), p, p + t.nbytes());
    }
    io::write_file_atomic(path, out);
}

Manifest read_manifest(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    Reader r{bytes};
    return parse_header(r);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    Reader r{bytes};
    Checkpoint ck;
    ck.manifest = parse_header(r);
    ck.model = DLFModel(ck.manifest.model);
    auto state = state_of(ck.model);
    const auto count = r.get<std::uint32_t>();
    require(count == state.size(), ErrorKind::checkpoint_mismatch,
            "checkpoint holds " + std::to_string(count) + " tensors, model expects " + std::to_string(state.size()));
    torch::NoGradGuard guard;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name = r.str(r.get<std::uint16_t>());
        const auto dtype = dtype_of(r.get<std::uint8_t>());
        const auto rank = r.get<std::uint8_t>();
        std::vector<std::int64_t> dims(rank);
        for (auto& d : dims) d = static_cast<std::int64_t>(r.get<std::uint64_t>());
        auto it = state.find(name);
        require(it != state.end(), ErrorKind::checkpoint_mismatch, "unexpected tensor '" + name + "'");
        auto& dst = it->second;
        require(dst.sizes().vec() == dims && dst.scalar_type() == dtype, ErrorKind::checkpoint_mismatch,
                "tensor '" + name + "' has a different shape or dtype");
        const auto n = dst.nbytes();
        r.need(n);
        auto src = torch::from_blob(const_cast<unsigned char*>(bytes.data() + r.pos), dims, dtype);
        dst.copy_(src);
        r.pos += n;
    }
    require(r.pos == bytes.size(), ErrorKind::length, "trailing bytes after the last tensor");
    ck.model->eval();
    return ck;
}

}  // namespace dlf::net
