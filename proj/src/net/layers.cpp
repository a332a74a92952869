#include "dlf/net/layers.hpp"

#include <cmath>

#include "dlf/error.hpp"

namespace dlf::net {

namespace F = torch::nn::functional;

torch::Tensor window_partition(const torch::Tensor& x, int ws) {
    const auto b = x.size(0), h = x.size(1), w = x.size(2), c = x.size(3);
    require(h % ws == 0 && w % ws == 0, ErrorKind::shape, "map not divisible into windows");
    return x.view({b, h / ws, ws, w / ws, ws, c}).permute({0, 1, 3, 2, 4, 5}).reshape({-1, ws * ws, c});
}

torch::Tensor window_reverse(const torch::Tensor& windows, int ws, std::int64_t b, std::int64_t h, std::int64_t w) {
    const auto c = windows.size(2);
    return windows.view({b, h / ws, w / ws, ws, ws, c}).permute({0, 1, 3, 2, 4, 5}).reshape({b, h, w, c});
}

torch::Tensor shifted_window_mask(std::int64_t h, std::int64_t w, int ws, int shift) {
    auto region = torch::zeros({1, h, w, 1});
    auto acc = region.accessor<float, 4>();
    auto band = [&](std::int64_t i, std::int64_t n) { return i < n - ws ? 0 : (i < n - shift ? 1 : 2); };
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) acc[0][y][x][0] = static_cast<float>(band(y, h) * 3 + band(x, w));
    auto ids = window_partition(region, ws).squeeze(-1);  // (nW, L)
    auto diff = ids.unsqueeze(1) - ids.unsqueeze(2);
    return torch::where(diff != 0, torch::full_like(diff, -1e4f), torch::zeros_like(diff));
}

MlpImpl::MlpImpl(int dim, int hidden, bool zero_out) {
    fc1 = register_module("fc1", torch::nn::Linear(dim, hidden));
    fc2 = register_module("fc2", torch::nn::Linear(hidden, dim));
    if (zero_out) {
        torch::NoGradGuard g;
        fc2->weight.zero_();
        fc2->bias.zero_();
    }
}

torch::Tensor MlpImpl::forward(const torch::Tensor& x) { return fc2(F::gelu(fc1(x))); }

AttentionImpl::AttentionImpl(int dim, int heads_, bool zero_out) : heads(heads_) {
    qkv = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
    proj = register_module("proj", torch::nn::Linear(dim, dim));
    if (zero_out) {
        torch::NoGradGuard g;
        proj->weight.zero_();
        proj->bias.zero_();
    }
}

torch::Tensor AttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& mask) {
    const auto b = x.size(0), l = x.size(1), c = x.size(2);
    const auto hd = c / heads;
    auto t = qkv(x).view({b, l, 3, heads, hd}).permute({2, 0, 3, 1, 4});
    auto q = t[0], k = t[1], v = t[2];
    auto attn = torch::matmul(q, k.transpose(-2, -1)) * (1.0 / std::sqrt(static_cast<double>(hd)));
    if (mask.defined()) {
        const auto nw = mask.size(0);
        attn = attn.view({b / nw, nw, heads, l, l}) + mask.unsqueeze(1).unsqueeze(0);
        attn = attn.view({b, heads, l, l});
    }
    attn = torch::softmax(attn, -1);
    auto out = torch::matmul(attn, v).transpose(1, 2).reshape({b, l, c});
    return proj(out);
}

TransformerBlockImpl::TransformerBlockImpl(int dim, int heads, int mlp_ratio) {
    ln1 = register_module("ln1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    attn = register_module("attn", Attention(dim, heads));
    ln2 = register_module("ln2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    mlp = register_module("mlp", Mlp(dim, dim * mlp_ratio));
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& mask) {
    auto y = x + attn(ln1(x), mask);
    return y + mlp(ln2(y));
}

ConvNeXtBlockImpl::ConvNeXtBlockImpl(int dim, int mlp_ratio) {
    dw = register_module("dw", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim, dim, 7).padding(3).groups(dim)));
    ln = register_module("ln", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    mlp = register_module("mlp", Mlp(dim, dim * mlp_ratio));
}

torch::Tensor ConvNeXtBlockImpl::forward(const torch::Tensor& x) {
    auto y = dw(x).permute({0, 2, 3, 1});
    y = mlp(ln(y)).permute({0, 3, 1, 2});
    return x + y;
}

DetailBlockImpl::DetailBlockImpl(int dim, int heads, int ws_, bool shifted_, int mlp_ratio)
    : ws(ws_), shifted(shifted_ && ws_ > 1) {
    attn_block = register_module("attn_block", TransformerBlock(dim, heads, mlp_ratio));
    conv_block = register_module("conv_block", ConvNeXtBlock(dim, mlp_ratio));
}

torch::Tensor DetailBlockImpl::forward(const torch::Tensor& x) {
    const auto b = x.size(0), h = x.size(2), w = x.size(3);
    require(h % ws == 0 && w % ws == 0, ErrorKind::shape, "detail map not divisible by the detail window");
    auto t = x.permute({0, 2, 3, 1});
    const int shift = ws / 2;
    torch::Tensor mask;
    if (shifted) {
        t = torch::roll(t, {-shift, -shift}, {1, 2});
        mask = shifted_window_mask(h, w, ws, shift).to(x.dtype());
    }
    auto win = attn_block(window_partition(t.contiguous(), ws), mask);
    t = window_reverse(win, ws, b, h, w);
    if (shifted) t = torch::roll(t, {shift, shift}, {1, 2});
    return conv_block(t.permute({0, 3, 1, 2}).contiguous());
}

InteractiveTransformImpl::InteractiveTransformImpl(int dim, int heads, int window_, int mlp_ratio, bool with_ffn)
    : window(window_) {
    ln = register_module("ln", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    attn = register_module("attn", Attention(dim, heads, /*zero_out=*/true));
    if (with_ffn) {
        ln_ffn = register_module("ln_ffn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
        ffn = register_module("ffn", Mlp(dim, dim * mlp_ratio, /*zero_out=*/true));
    }
}

std::pair<torch::Tensor, torch::Tensor> InteractiveTransformImpl::forward(const torch::Tensor& f_s,
                                                                         const torch::Tensor& f_d) {
    const auto b = f_d.size(0), h = f_d.size(2), w = f_d.size(3);
    require(h % window == 0 && w % window == 0, ErrorKind::shape, "detail feature not divisible into windows");
    const auto n = (h / window) * (w / window);
    require(f_s.size(0) == b * n, ErrorKind::shape,
            "window count mismatch: semantic " + std::to_string(f_s.size(0)) + " vs detail " + std::to_string(b * n));
    const auto ls = f_s.size(1);
    auto d = window_partition(f_d.permute({0, 2, 3, 1}).contiguous(), window);
    auto joint = torch::cat({f_s, d}, 1);  // (B * N, ls + window^2, C)
    joint = joint + attn(ln(joint));
    if (!ffn.is_empty()) joint = joint + ffn(ln_ffn(joint));
    auto s_out = joint.narrow(1, 0, ls);
    auto d_out = window_reverse(joint.narrow(1, ls, window * window).contiguous(), window, b, h, w);
    return {s_out, d_out.permute({0, 3, 1, 2}).contiguous()};
}

int group_count(int channels) {
    for (int g : {8, 4, 2})
        if (channels % g == 0) return g;
    return 1;
}

ResBlockImpl::ResBlockImpl(int in, int out) {
    n1 = register_module("n1", torch::nn::GroupNorm(group_count(in), in));
    c1 = register_module("c1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1)));
    n2 = register_module("n2", torch::nn::GroupNorm(group_count(out), out));
    c2 = register_module("c2", torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1)));
    if (in != out) skip = register_module("skip", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1)));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
    auto y = c1(torch::silu(n1(x)));
    y = c2(torch::silu(n2(y)));
    return (skip.is_empty() ? x : skip(x)) + y;
}

torch::Tensor channel_layer_norm(const torch::Tensor& x, torch::nn::LayerNorm ln) {
    return ln(x.permute({0, 2, 3, 1})).permute({0, 3, 1, 2});
}

}  // namespace dlf::net
