#include "dlf/codec/codec.hpp"

#include <cmath>

#include "dlf/bits/index_pack.hpp"
#include "dlf/bits/range_coder.hpp"
#include "dlf/entropy/cdf.hpp"
#include "dlf/entropy/context_model.hpp"
#include "dlf/entropy/schedule.hpp"
#include "dlf/error.hpp"
#include "dlf/quant/quant.hpp"

namespace dlf::codec {

namespace {

constexpr int kMaxSide = 1 << 16;

int round_up(int v, int m) { return (v + m - 1) / m * m; }

struct GroupTables {
    std::vector<float> mu, scale;
    std::vector<std::vector<double>> pmf;
    std::vector<bits::CdfTable> tables;
};

// Predicts group `g` from `partial` and builds the coding tables of its
// positions. Encoder and decoder both go through here.
GroupTables group_tables(net::DLFModel& model, const entropy::PartialDetail& partial,
                         const std::vector<entropy::Position>& positions, int g, bool want_tables) {
    auto [mu_raw, scale_raw] = model->det_entropy->predict(partial, g);
    const auto mu_t = mu_raw.contiguous(), scale_t = scale_raw.contiguous();
    auto mu = mu_t.accessor<float, 4>();
    auto scale = scale_t.accessor<float, 4>();
    GroupTables out;
    const int smax = model->config().symbol_max;
    for (const auto& p : positions) {
        const float m = mu[0][p.channel][p.y][p.x], s = scale[0][p.channel][p.y][p.x];
        out.mu.push_back(m);
        out.scale.push_back(s);
        out.pmf.push_back(entropy::discretized_laplace_pmf(m, s, smax));
        if (want_tables) out.tables.push_back(entropy::build_cdf(out.pmf.back()));
    }
    return out;
}

std::size_t flat_index(const entropy::Position& p, int h2, int w2) {
    return (static_cast<std::size_t>(p.channel) * h2 + p.y) * w2 + p.x;
}

}  // namespace

Layout Layout::of(const net::ModelConfig& cfg, int orig_h, int orig_w) {
    require(orig_h >= 1 && orig_w >= 1, ErrorKind::invalid_input, "zero-area image");
    require(orig_h <= kMaxSide && orig_w <= kMaxSide, ErrorKind::format, "image side exceeds 65536 pixels");
    Layout l;
    l.orig_h = orig_h;
    l.orig_w = orig_w;
    const int unit = cfg.window_pixels();
    l.padded_h = round_up(orig_h, unit);
    l.padded_w = round_up(orig_w, unit);
    l.h = l.padded_h / net::kPatchSize;
    l.w = l.padded_w / net::kPatchSize;
    l.h2 = l.h / 2;
    l.w2 = l.w / 2;
    l.windows = (l.h / cfg.window) * (l.w / cfg.window);
    return l;
}

QuantizedLatents quantize(net::DLFModel& model, const Image& image) {
    torch::NoGradGuard guard;
    const auto& cfg = model->config();
    QuantizedLatents q;
    q.layout = Layout::of(cfg, image.height, image.width);
    const auto plane = pad_to_multiple(image, cfg.window_pixels());
    const auto enc = model->encode(net::to_tensor(plane.pixels));

    const auto idx = quant::vq_assign(enc.y_s, model->sem_codebook).indices.contiguous();  // (1, N, T)
    auto acc = idx.accessor<std::int64_t, 3>();
    const int kept = cfg.active_tokens();
    for (int n = 0; n < q.layout.windows; ++n)
        for (int t = 0; t < kept; ++t) q.semantic_indices.push_back(static_cast<std::uint32_t>(acc[0][n][t]));

    if (cfg.variant == net::Variant::vq_detail) {
        auto vecs = enc.y_d[0].permute({1, 2, 0}).contiguous();  // (h2, w2, C_d)
        auto di = quant::vq_assign(vecs, model->det_codebook).indices.reshape({-1}).contiguous();
        for (std::int64_t i = 0; i < di.numel(); ++i)
            q.detail_indices.push_back(static_cast<std::uint32_t>(di[i].item<std::int64_t>()));
    } else if (cfg.uses_detail()) {
        auto sym = quant::sq_quantize(enc.y_d, model->steps(), quant::SqMode::round, cfg.symbol_max)
                       .symbols.reshape({-1})
                       .contiguous();
        const auto* p = sym.data_ptr<std::int32_t>();
        q.detail_symbols.assign(p, p + sym.numel());
    }
    return q;
}

std::pair<torch::Tensor, torch::Tensor> dequantize(net::DLFModel& model, const QuantizedLatents& q) {
    const auto& cfg = model->config();
    const auto& l = q.layout;
    const int kept = cfg.active_tokens();
    require(q.semantic_indices.size() == static_cast<std::size_t>(l.windows) * kept, ErrorKind::shape,
            "semantic index count does not match the layout");
    auto idx = torch::zeros({1, l.windows, cfg.tokens}, torch::kInt64);
    auto acc = idx.accessor<std::int64_t, 3>();
    for (int n = 0; n < l.windows; ++n)
        for (int t = 0; t < kept; ++t) {
            const auto v = q.semantic_indices[static_cast<std::size_t>(n) * kept + t];
            require(v < cfg.codebook_size, ErrorKind::format, "semantic index out of range");
            acc[0][n][t] = v;
        }
    auto ys = quant::vq_lookup(idx, model->sem_codebook);

    torch::Tensor yd;
    if (cfg.variant == net::Variant::vq_detail) {
        require(q.detail_indices.size() == static_cast<std::size_t>(l.h2) * l.w2, ErrorKind::shape,
                "detail index count does not match the layout");
        auto di = torch::empty({l.h2, l.w2}, torch::kInt64);
        auto* p = di.data_ptr<std::int64_t>();
        for (std::size_t i = 0; i < q.detail_indices.size(); ++i) p[i] = q.detail_indices[i];
        yd = quant::vq_lookup(di, model->det_codebook).permute({2, 0, 1}).unsqueeze(0).contiguous();
    } else if (cfg.uses_detail()) {
        require(q.detail_symbols.size() == static_cast<std::size_t>(cfg.detail_dim) * l.h2 * l.w2, ErrorKind::shape,
                "detail symbol count does not match the layout");
        auto sym = torch::empty({1, cfg.detail_dim, l.h2, l.w2}, torch::kInt32);
        std::copy(q.detail_symbols.begin(), q.detail_symbols.end(), sym.data_ptr<std::int32_t>());
        yd = quant::dequantize(sym, model->steps());
    } else {
        yd = torch::zeros({1, cfg.detail_dim, l.h2, l.w2});
    }
    return {ys, yd};
}

torch::Tensor reconstruct_latent(net::DLFModel& model, const QuantizedLatents& q) {
    torch::NoGradGuard guard;
    auto [ys, yd] = dequantize(model, q);
    auto dec = model->dual_decode(ys, yd, model->config().active_tokens());
    return model->fuse(dec.h_d, dec.h_s);
}

Image reconstruct(net::DLFModel& model, const QuantizedLatents& q) {
    torch::NoGradGuard guard;
    auto h_hat = reconstruct_latent(model, q);
    return net::generate(model, h_hat, q.layout.orig_h, q.layout.orig_w);
}

std::vector<std::uint8_t> encode_detail(net::DLFModel& model, std::span<const int> symbols, int h2, int w2,
                                        const GroupObserver& observer) {
    torch::NoGradGuard guard;
    const auto& cfg = model->config();
    const int c = cfg.detail_dim, smax = cfg.symbol_max;
    require(symbols.size() == static_cast<std::size_t>(c) * h2 * w2, ErrorKind::shape, "detail symbol count mismatch");
    const auto schedule = entropy::quadtree_schedule(c, h2, w2);
    entropy::PartialDetail partial;
    partial.symbols = torch::zeros({1, c, h2, w2});
    auto acc = partial.symbols.accessor<float, 4>();
    bits::RangeEncoder enc;
    for (int g = 0; g < entropy::kGroupCount; ++g) {
        const auto& positions = schedule.groups[static_cast<std::size_t>(g)];
        if (!positions.empty()) {
            auto t = group_tables(model, partial, positions, g, true);
            if (observer) observer(g, t.mu, t.scale);
            for (std::size_t i = 0; i < positions.size(); ++i) {
                const int s = symbols[flat_index(positions[i], h2, w2)];
                require(s >= -smax && s <= smax, ErrorKind::invalid_input, "detail symbol outside the alphabet");
                enc.encode(s + smax, t.tables[i]);
            }
            for (const auto& p : positions)
                acc[0][p.channel][p.y][p.x] = static_cast<float>(symbols[flat_index(p, h2, w2)]);
        }
        partial.filled[static_cast<std::size_t>(g)] = true;
    }
    return enc.finish();
}

std::vector<int> decode_detail(net::DLFModel& model, std::span<const std::uint8_t> payload, int h2, int w2,
                               const GroupObserver& observer) {
    torch::NoGradGuard guard;
    const auto& cfg = model->config();
    const int c = cfg.detail_dim, smax = cfg.symbol_max;
    const auto schedule = entropy::quadtree_schedule(c, h2, w2);
    std::vector<int> out(static_cast<std::size_t>(c) * h2 * w2, 0);
    entropy::PartialDetail partial;
    partial.symbols = torch::zeros({1, c, h2, w2});
    auto acc = partial.symbols.accessor<float, 4>();
    bits::RangeDecoder dec(payload);
    for (int g = 0; g < entropy::kGroupCount; ++g) {
        const auto& positions = schedule.groups[static_cast<std::size_t>(g)];
        if (!positions.empty()) {
            auto t = group_tables(model, partial, positions, g, true);
            if (observer) observer(g, t.mu, t.scale);
            for (std::size_t i = 0; i < positions.size(); ++i) {
                const int s = dec.decode(t.tables[i]) - smax;
                out[flat_index(positions[i], h2, w2)] = s;
                acc[0][positions[i].channel][positions[i].y][positions[i].x] = static_cast<float>(s);
            }
        }
        partial.filled[static_cast<std::size_t>(g)] = true;
    }
    dec.finish();
    return out;
}

double estimate_detail_bits(net::DLFModel& model, std::span<const int> symbols, int h2, int w2) {
    torch::NoGradGuard guard;
    const auto& cfg = model->config();
    const int c = cfg.detail_dim, smax = cfg.symbol_max;
    require(symbols.size() == static_cast<std::size_t>(c) * h2 * w2, ErrorKind::shape, "detail symbol count mismatch");
    const auto schedule = entropy::quadtree_schedule(c, h2, w2);
    entropy::PartialDetail partial;
    partial.symbols = torch::zeros({1, c, h2, w2});
    auto acc = partial.symbols.accessor<float, 4>();
    double total = 0.0;
    for (int g = 0; g < entropy::kGroupCount; ++g) {
        const auto& positions = schedule.groups[static_cast<std::size_t>(g)];
        if (!positions.empty()) {
            auto t = group_tables(model, partial, positions, g, false);
            for (std::size_t i = 0; i < positions.size(); ++i) {
                const int s = symbols[flat_index(positions[i], h2, w2)];
                total -= std::log2(t.pmf[i][static_cast<std::size_t>(s + smax)]);
            }
            for (const auto& p : positions)
                acc[0][p.channel][p.y][p.x] = static_cast<float>(symbols[flat_index(p, h2, w2)]);
        }
        partial.filled[static_cast<std::size_t>(g)] = true;
    }
    return total;
}

bits::BitContainer serialize(net::DLFModel& model, const QuantizedLatents& q, int lambda_index) {
    const auto& cfg = model->config();
    require(lambda_index >= 0 && lambda_index <= 255, ErrorKind::invalid_input, "lambda_index out of range");
    bits::BitContainer c;
    c.lambda_index = static_cast<std::uint8_t>(lambda_index);
    c.orig_w = static_cast<std::uint32_t>(q.layout.orig_w);
    c.orig_h = static_cast<std::uint32_t>(q.layout.orig_h);
    c.semantic_payload = bits::pack_indices(q.semantic_indices, cfg.codebook_size);
    if (cfg.variant == net::Variant::vq_detail)
        c.detail_payload = bits::pack_indices(q.detail_indices, cfg.detail_codebook_size);
    else if (cfg.uses_detail())
        c.detail_payload = encode_detail(model, q.detail_symbols, q.layout.h2, q.layout.w2);
    return c;
}

QuantizedLatents deserialize(net::DLFModel& model, const bits::BitContainer& c, int lambda_index) {
    const auto& cfg = model->config();
    require(c.lambda_index == lambda_index, ErrorKind::checkpoint_mismatch,
            "container was written for lambda index " + std::to_string(c.lambda_index) + ", checkpoint has " +
                std::to_string(lambda_index));
    require(c.orig_w >= 1 && c.orig_h >= 1, ErrorKind::format, "container has a zero-area image");
    QuantizedLatents q;
    q.layout = Layout::of(cfg, static_cast<int>(c.orig_h), static_cast<int>(c.orig_w));
    const auto count = static_cast<std::size_t>(q.layout.windows) * cfg.active_tokens();
    q.semantic_indices = bits::unpack_indices(c.semantic_payload, cfg.codebook_size, count);
    if (cfg.variant == net::Variant::vq_detail) {
        q.detail_indices = bits::unpack_indices(c.detail_payload, cfg.detail_codebook_size,
                                                static_cast<std::size_t>(q.layout.h2) * q.layout.w2);
    } else if (cfg.uses_detail()) {
        q.detail_symbols = decode_detail(model, c.detail_payload, q.layout.h2, q.layout.w2);
    } else {
        require(c.detail_payload.empty(), ErrorKind::format, "semantic-only checkpoint but the container has detail bytes");
    }
    return q;
}

std::vector<std::uint8_t> encode_image(net::DLFModel& model, const Image& image, int lambda_index) {
    return bits::write_container(serialize(model, quantize(model, image), lambda_index));
}

Image decode_image(net::DLFModel& model, std::span<const std::uint8_t> bytes, int lambda_index) {
    return reconstruct(model, deserialize(model, bits::read_container(bytes), lambda_index));
}

double compute_bpp(const bits::BitContainer& c) {
    const double pixels = static_cast<double>(c.orig_w) * static_cast<double>(c.orig_h);
    require(pixels > 0.0, ErrorKind::invalid_input, "zero-area image");
    return static_cast<double>(c.total_bytes()) * 8.0 / pixels;
}

}  // namespace dlf::codec
