#pragma once

#include <utility>

#include <torch/torch.h>

namespace dlf::net {

// (B, H, W, C) -> (B * nW, ws * ws, C), windows in row-major order per image.
torch::Tensor window_partition(const torch::Tensor& x, int ws);
// Inverse of window_partition.
torch::Tensor window_reverse(const torch::Tensor& windows, int ws, std::int64_t b, std::int64_t h, std::int64_t w);

// Additive (nW, L, L) mask for shifted-window attention on an h x w map:
// tokens that came from different regions before the cyclic shift cannot
// attend to each other.
torch::Tensor shifted_window_mask(std::int64_t h, std::int64_t w, int ws, int shift);

struct MlpImpl : torch::nn::Module {
    MlpImpl(int dim, int hidden, bool zero_out = false);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(Mlp);

// Multi-head self-attention over (B, L, C). With zero_out the output
// projection starts at zero, so a residual around it is the identity.
struct AttentionImpl : torch::nn::Module {
    AttentionImpl(int dim, int heads, bool zero_out = false);
    // mask: optional additive (nW, L, L); the batch must be a multiple of nW.
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask = {});

    int heads;
    torch::nn::Linear qkv{nullptr}, proj{nullptr};
};
TORCH_MODULE(Attention);

// Pre-norm transformer block.
struct TransformerBlockImpl : torch::nn::Module {
    TransformerBlockImpl(int dim, int heads, int mlp_ratio);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask = {});

    torch::nn::LayerNorm ln1{nullptr}, ln2{nullptr};
    Attention attn{nullptr};
    Mlp mlp{nullptr};
};
TORCH_MODULE(TransformerBlock);

// Depthwise 7x7 conv, channel LayerNorm, pointwise MLP, residual. (B, C, H, W).
struct ConvNeXtBlockImpl : torch::nn::Module {
    ConvNeXtBlockImpl(int dim, int mlp_ratio);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d dw{nullptr};
    torch::nn::LayerNorm ln{nullptr};
    Mlp mlp{nullptr};
};
TORCH_MODULE(ConvNeXtBlock);

// Window attention (cyclically shifted by ws/2 when `shifted`) followed by a
// ConvNeXt block. (B, C, H, W) in and out.
struct DetailBlockImpl : torch::nn::Module {
    DetailBlockImpl(int dim, int heads, int ws, bool shifted, int mlp_ratio);
    torch::Tensor forward(const torch::Tensor& x);

    int ws;
    bool shifted;
    TransformerBlock attn_block{nullptr};
    ConvNeXtBlock conv_block{nullptr};
};
TORCH_MODULE(DetailBlock);

// Cross-branch joint attention. Per window, the semantic sequence
// (grid + 1-D tokens) and the window's detail tokens are concatenated,
// attended jointly and split back. Both residual branches start at zero.
struct InteractiveTransformImpl : torch::nn::Module {
    InteractiveTransformImpl(int dim, int heads, int window, int mlp_ratio, bool ffn);

    // f_s: (B * N, L, C); f_d: (B, C, h, w) with N = (h / window) * (w / window).
    std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& f_s, const torch::Tensor& f_d);

    int window;
    torch::nn::LayerNorm ln{nullptr}, ln_ffn{nullptr};
    Attention attn{nullptr};
    Mlp ffn{nullptr};
};
TORCH_MODULE(InteractiveTransform);

// GroupNorm-SiLU-conv twice with a (projected) skip.
struct ResBlockImpl : torch::nn::Module {
    ResBlockImpl(int in, int out);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::GroupNorm n1{nullptr}, n2{nullptr};
    torch::nn::Conv2d c1{nullptr}, c2{nullptr}, skip{nullptr};
};
TORCH_MODULE(ResBlock);

int group_count(int channels);

// Channel LayerNorm for (B, C, H, W) maps.
torch::Tensor channel_layer_norm(const torch::Tensor& x, torch::nn::LayerNorm ln);

}  // namespace dlf::net
