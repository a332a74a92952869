#include "dlf/net/model.hpp"

#include <cstring>

#include "dlf/error.hpp"

namespace dlf::net {

namespace {

torch::nn::Conv2d conv(int in, int out, int k, int stride = 1) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k == 3 ? 1 : 0));
}

torch::nn::LayerNorm layer_norm(int dim, bool affine = true) {
    return torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim}).elementwise_affine(affine));
}

torch::Tensor small_normal(std::vector<std::int64_t> shape) { return torch::randn(shape) * 0.02; }

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

const char* to_string(ParamGroup g) {
    switch (g) {
        case ParamGroup::semantic: return "semantic";
        case ParamGroup::detail: return "detail";
        case ParamGroup::interaction: return "interaction";
        case ParamGroup::adaptor: return "adaptor";
        case ParamGroup::generator: return "generator";
        case ParamGroup::auxiliary: return "auxiliary";
    }
    return "?";
}

ParamGroup param_group(const std::string& name) {
    if (starts_with(name, "sem_")) return ParamGroup::semantic;
    if (starts_with(name, "det_")) return ParamGroup::detail;
    if (starts_with(name, "it_")) return ParamGroup::interaction;
    if (starts_with(name, "adaptor")) return ParamGroup::adaptor;
    if (starts_with(name, "generator")) return ParamGroup::generator;
    if (starts_with(name, "aux")) return ParamGroup::auxiliary;
    fail(ErrorKind::invalid_input, "parameter '" + name + "' has no group");
}

GeneratorImpl::GeneratorImpl(int in_channels, const std::vector<int>& ch) {
    conv_in = register_module("conv_in", conv(in_channels, ch[0], 3));
    res = register_module("res", torch::nn::ModuleList());
    up = register_module("up", torch::nn::ModuleList());
    for (std::size_t i = 0; i < 4; ++i) {
        const int next = ch[std::min<std::size_t>(i + 1, 3)];
        res->push_back(ResBlock(ch[i], ch[i]));
        up->push_back(conv(ch[i], next, 3));
    }
    norm_out = register_module("norm_out", torch::nn::GroupNorm(group_count(ch[3]), ch[3]));
    conv_out = register_module("conv_out", conv(ch[3], 3, 3));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& h) {
    auto x = conv_in(h);
    for (std::size_t i = 0; i < 4; ++i) {
        x = res[i]->as<ResBlock>()->forward(x);
        x = torch::upsample_nearest2d(x, {x.size(2) * 2, x.size(3) * 2});
        x = up[i]->as<torch::nn::Conv2d>()->forward(x);
    }
    return conv_out(torch::silu(norm_out(x))) + 0.5;
}

AuxEncoderImpl::AuxEncoderImpl(int out_channels, const std::vector<int>& ch) {
    conv_in = register_module("conv_in", conv(3, ch[3], 3));
    down = register_module("down", torch::nn::ModuleList());
    res = register_module("res", torch::nn::ModuleList());
    for (int i = 3; i >= 0; --i) {
        const int prev = ch[static_cast<std::size_t>(std::min(i + 1, 3))];
        down->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, ch[static_cast<std::size_t>(i)], 4).stride(2).padding(1)));
        res->push_back(ResBlock(ch[static_cast<std::size_t>(i)], ch[static_cast<std::size_t>(i)]));
    }
    norm_out = register_module("norm_out", torch::nn::GroupNorm(group_count(ch[0]), ch[0]));
    conv_out = register_module("conv_out", conv(ch[0], out_channels, 1));
    ln_out = register_module("ln_out", layer_norm(out_channels, /*affine=*/false));
}

torch::Tensor AuxEncoderImpl::forward(const torch::Tensor& x) {
    auto y = conv_in(x);
    for (std::size_t i = 0; i < 4; ++i) {
        y = down[i]->as<torch::nn::Conv2d>()->forward(y);
        y = res[i]->as<ResBlock>()->forward(y);
    }
    return channel_layer_norm(conv_out(torch::silu(norm_out(y))), ln_out);
}

DLFModelImpl::DLFModelImpl(const ModelConfig& cfg) : interaction(cfg.uses_interaction()), cfg_(cfg) {
    cfg_.validate();
    const int c = cfg.embed_dim, cd = cfg.detail_dim, t = cfg.tokens, g = cfg.grid_tokens();

    sem_embed = register_module("sem_embed", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, c, kPatchSize).stride(kPatchSize)));
    sem_enc_grid_pos = register_parameter("sem_enc_grid_pos", small_normal({g, c}));
    sem_enc_tokens = register_parameter("sem_enc_tokens", small_normal({t, c}));
    sem_enc_blocks = register_module("sem_enc_blocks", torch::nn::ModuleList());
    det_enc_blocks = register_module("det_enc_blocks", torch::nn::ModuleList());
    it_enc = register_module("it_enc", torch::nn::ModuleList());
    sem_dec_blocks = register_module("sem_dec_blocks", torch::nn::ModuleList());
    det_dec_blocks = register_module("det_dec_blocks", torch::nn::ModuleList());
    it_dec = register_module("it_dec", torch::nn::ModuleList());
    for (int s = 0; s < cfg.stages; ++s) {
        const bool shifted = s % 2 == 1;
        sem_enc_blocks->push_back(TransformerBlock(c, cfg.heads, cfg.mlp_ratio));
        det_enc_blocks->push_back(DetailBlock(c, cfg.heads, cfg.detail_window, shifted, cfg.mlp_ratio));
        it_enc->push_back(InteractiveTransform(c, cfg.heads, cfg.window, cfg.mlp_ratio, cfg.it_ffn));
        sem_dec_blocks->push_back(TransformerBlock(c, cfg.heads, cfg.mlp_ratio));
        det_dec_blocks->push_back(DetailBlock(c, cfg.heads, cfg.detail_window, shifted, cfg.mlp_ratio));
        it_dec->push_back(InteractiveTransform(c, cfg.heads, cfg.window, cfg.mlp_ratio, cfg.it_ffn));
    }
    sem_enc_ln = register_module("sem_enc_ln", layer_norm(c));
    sem_enc_out = register_module("sem_enc_out", torch::nn::Linear(c, c));
    det_enc_ln = register_module("det_enc_ln", layer_norm(c));
    det_down = register_module("det_down", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, cd, 2).stride(2)));

    sem_dec_in = register_module("sem_dec_in", torch::nn::Linear(c, c));
    sem_dec_token_pos = register_parameter("sem_dec_token_pos", small_normal({t, c}));
    sem_dec_placeholder = register_parameter("sem_dec_placeholder", small_normal({g, c}));
    sem_dec_mask_token = register_parameter("sem_dec_mask_token", small_normal({c}));
    sem_dec_ln = register_module("sem_dec_ln", layer_norm(c));
    sem_dec_out = register_module("sem_dec_out", torch::nn::Linear(c, c));
    det_up = register_module("det_up", torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(cd, c, 2).stride(2)));
    det_dec_ln = register_module("det_dec_ln", layer_norm(c));
    det_dec_out = register_module("det_dec_out", conv(c, c, 1));

    adaptor_in = register_module("adaptor_in", conv(2 * c, c, 1));
    adaptor_blocks = register_module("adaptor_blocks", torch::nn::ModuleList());
    for (int i = 0; i < 2; ++i) adaptor_blocks->push_back(ConvNeXtBlock(c, cfg.mlp_ratio));
    adaptor_out = register_module("adaptor_out", conv(c, c, 1));

    generator = register_module("generator", Generator(c, cfg.generator_channels));
    aux = register_module("aux", AuxEncoder(c, cfg.generator_channels));

    sem_codebook = register_parameter("sem_codebook", torch::randn({static_cast<std::int64_t>(cfg.codebook_size), c}) * 0.5);
    if (cfg.variant == Variant::vq_detail)
        det_codebook = register_parameter(
            "det_codebook", torch::randn({static_cast<std::int64_t>(cfg.detail_codebook_size), cd}) * 0.5);
    det_log_step = register_parameter("det_log_step", torch::zeros({cd}));
    det_entropy = register_module("det_entropy", entropy::ContextModel(cd, cfg.context_channels, cfg.symbol_max));
}

torch::Tensor DLFModelImpl::embed(const torch::Tensor& x) {
    require(x.dim() == 4 && x.size(1) == 3, ErrorKind::shape, "expected a (B, 3, H, W) image batch");
    require(x.size(2) % kPatchSize == 0 && x.size(3) % kPatchSize == 0, ErrorKind::shape,
            "image dims must be multiples of 16");
    return sem_embed(x);
}

torch::Tensor DLFModelImpl::to_windows(const torch::Tensor& grid) const {
    return window_partition(grid.permute({0, 2, 3, 1}).contiguous(), cfg_.window);
}

torch::Tensor DLFModelImpl::from_windows(const torch::Tensor& windows, std::int64_t b, std::int64_t h,
                                        std::int64_t w) const {
    return window_reverse(windows.contiguous(), cfg_.window, b, h, w).permute({0, 3, 1, 2}).contiguous();
}

EncoderOutput DLFModelImpl::dual_encode(const torch::Tensor& emb) {
    const auto b = emb.size(0), h = emb.size(2), w = emb.size(3);
    require(h % cfg_.window == 0 && w % cfg_.window == 0, ErrorKind::shape,
            "grid " + std::to_string(h) + "x" + std::to_string(w) + " is not a whole number of " +
                std::to_string(cfg_.window) + "x" + std::to_string(cfg_.window) + " windows");
    const auto n = (h / cfg_.window) * (w / cfg_.window);
    const auto g = cfg_.grid_tokens();

    auto grid = to_windows(emb) + sem_enc_grid_pos;
    auto f_s = torch::cat({grid, sem_enc_tokens.unsqueeze(0).expand({b * n, cfg_.tokens, cfg_.embed_dim})}, 1);
    auto f_d = emb;
    for (int s = 0; s < cfg_.stages; ++s) {
        f_s = sem_enc_blocks[static_cast<std::size_t>(s)]->as<TransformerBlock>()->forward(f_s);
        f_d = det_enc_blocks[static_cast<std::size_t>(s)]->as<DetailBlock>()->forward(f_d);
        if (interaction) std::tie(f_s, f_d) = it_enc[static_cast<std::size_t>(s)]->as<InteractiveTransform>()->forward(f_s, f_d);
    }
    EncoderOutput out;
    out.y_s = sem_enc_out(sem_enc_ln(f_s.narrow(1, g, cfg_.tokens))).view({b, n, cfg_.tokens, cfg_.embed_dim});
    out.y_d = det_down(channel_layer_norm(f_d, det_enc_ln));
    return out;
}

DecoderOutput DLFModelImpl::dual_decode(const torch::Tensor& yq_s, const torch::Tensor& yq_d, int kept_tokens) {
    require(yq_s.dim() == 4 && yq_s.size(2) == cfg_.tokens && yq_s.size(3) == cfg_.embed_dim, ErrorKind::shape,
            "semantic latent must be (B, N, T, C)");
    require(yq_d.dim() == 4 && yq_d.size(1) == cfg_.detail_dim, ErrorKind::shape,
            "detail latent must be (B, C_d, h/2, w/2)");
    const auto b = yq_d.size(0), h = yq_d.size(2) * 2, w = yq_d.size(3) * 2;
    require(yq_s.size(0) == b, ErrorKind::shape, "batch mismatch between latents");
    require(h % cfg_.window == 0 && w % cfg_.window == 0, ErrorKind::shape, "detail latent does not tile into windows");
    const auto n = (h / cfg_.window) * (w / cfg_.window);
    require(yq_s.size(1) == n, ErrorKind::shape,
            "semantic latent has " + std::to_string(yq_s.size(1)) + " windows, detail latent implies " + std::to_string(n));
    const int kept = kept_tokens > 0 ? kept_tokens : cfg_.active_tokens();
    require(kept <= cfg_.tokens, ErrorKind::invalid_input, "kept_tokens exceeds the token count");
    const auto g = cfg_.grid_tokens();

    auto tok = (sem_dec_in(yq_s) + sem_dec_token_pos).view({b * n, cfg_.tokens, cfg_.embed_dim});
    if (kept < cfg_.tokens)
        tok = torch::cat({tok.narrow(1, 0, kept),
                          sem_dec_mask_token.view({1, 1, -1}).expand({b * n, cfg_.tokens - kept, cfg_.embed_dim})},
                         1);
    auto f_s = torch::cat({sem_dec_placeholder.unsqueeze(0).expand({b * n, g, cfg_.embed_dim}), tok}, 1);
    auto f_d = det_up(yq_d);
    for (int s = 0; s < cfg_.stages; ++s) {
        f_s = sem_dec_blocks[static_cast<std::size_t>(s)]->as<TransformerBlock>()->forward(f_s);
        f_d = det_dec_blocks[static_cast<std::size_t>(s)]->as<DetailBlock>()->forward(f_d);
        if (interaction) std::tie(f_s, f_d) = it_dec[static_cast<std::size_t>(s)]->as<InteractiveTransform>()->forward(f_s, f_d);
    }
    DecoderOutput out;
    out.h_s = from_windows(sem_dec_out(sem_dec_ln(f_s.narrow(1, 0, g))), b, h, w);
    out.h_d = det_dec_out(channel_layer_norm(f_d, det_dec_ln));
    return out;
}

torch::Tensor DLFModelImpl::fuse(const torch::Tensor& h_d, const torch::Tensor& h_s) {
    require(h_d.sizes() == h_s.sizes(), ErrorKind::shape, "fuse: feature shapes differ");
    auto x = adaptor_in(torch::cat({h_d, h_s}, 1));
    for (auto& blk : *adaptor_blocks) x = blk->as<ConvNeXtBlock>()->forward(x);
    return adaptor_out(x);
}

torch::Tensor to_tensor(const Image& image) {
    require(image.channels == 3 && !image.empty(), ErrorKind::invalid_input, "expected a non-empty RGB image");
    return torch::from_blob(const_cast<float*>(image.data.data()), {1, 3, image.height, image.width}, torch::kFloat32)
        .clone();
}

Image to_image(const torch::Tensor& chw) {
    auto t = chw.detach().to(torch::kFloat32).contiguous();
    if (t.dim() == 4) t = t[0];
    Image img(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), static_cast<int>(t.size(2)));
    std::memcpy(img.data.data(), t.data_ptr<float>(), img.data.size() * sizeof(float));
    return img;
}

Image generate(DLFModel& model, const torch::Tensor& h_hat, int orig_h, int orig_w) {
    auto x = model->synthesize(h_hat).clamp(0.0, 1.0);
    require(orig_h <= x.size(2) && orig_w <= x.size(3), ErrorKind::shape, "original size exceeds the generated image");
    return to_image(x.narrow(2, 0, orig_h).narrow(3, 0, orig_w));
}

void set_trainable(DLFModel& model, std::initializer_list<ParamGroup> groups) {
    for (auto& p : model->named_parameters()) {
        const auto g = param_group(p.key());
        bool on = false;
        for (auto want : groups) on = on || want == g;
        p.value().set_requires_grad(on);
    }
}

}  // namespace dlf::net
