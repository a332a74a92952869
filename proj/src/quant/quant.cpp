#include "dlf/quant/quant.hpp"

#include "dlf/error.hpp"

namespace dlf::quant {

VqResult vq_assign(const torch::Tensor& y, const torch::Tensor& codebook) {
    require(codebook.dim() == 2 && codebook.size(0) > 0, ErrorKind::invalid_input, "empty codebook");
    require(y.size(-1) == codebook.size(1), ErrorKind::shape, "token width differs from codebook width");
    auto sizes = y.sizes().vec();
    sizes.pop_back();
    VqResult r;
    {
        torch::NoGradGuard guard;
        auto flat = y.detach().reshape({-1, y.size(-1)}).to(torch::kFloat64);
        auto cb = codebook.detach().to(torch::kFloat64);
        auto dist = flat.pow(2).sum(1, true) - 2.0 * flat.matmul(cb.t()) + cb.pow(2).sum(1).unsqueeze(0);
        r.indices = dist.argmin(1).view(sizes);
    }
    r.quantized = vq_lookup(r.indices, codebook);
    return r;
}

torch::Tensor vq_lookup(const torch::Tensor& indices, const torch::Tensor& codebook) {
    auto sizes = indices.sizes().vec();
    sizes.push_back(codebook.size(1));
    return codebook.index_select(0, indices.reshape({-1})).view(sizes);
}

torch::Tensor straight_through(const torch::Tensor& y, const torch::Tensor& q) { return y + (q - y).detach(); }

namespace {

torch::Tensor safe_norm(const torch::Tensor& v) {
    auto sq = v.pow(2).sum(-1);
    auto pos = sq > 0;
    return torch::where(pos, torch::sqrt(torch::where(pos, sq, torch::ones_like(sq))), torch::zeros_like(sq));
}

}  // namespace

torch::Tensor codebook_loss(const torch::Tensor& y, const torch::Tensor& q, double beta) {
    require(y.sizes() == q.sizes(), ErrorKind::shape, "codebook_loss shape mismatch");
    require(beta >= 0.0, ErrorKind::invalid_input, "beta must be >= 0");
    return safe_norm(y.detach() - q).mean() + beta * safe_norm(q.detach() - y).mean();
}

torch::Tensor round_half_away(const torch::Tensor& v) { return torch::sign(v) * torch::floor(v.abs() + 0.5); }

SqResult sq_quantize(const torch::Tensor& y, const torch::Tensor& steps, SqMode mode, int symbol_max) {
    require(y.dim() == 4 && steps.dim() == 1 && steps.size(0) == y.size(1), ErrorKind::shape,
            "sq_quantize expects (B, C, H, W) and one step per channel");
    require((steps > 0).all().item<bool>(), ErrorKind::invalid_input, "quantization steps must be positive");
    auto s = steps.view({1, -1, 1, 1});
    SqResult r;
    if (mode == SqMode::round) {
        auto sym = round_half_away(y / s).clamp(-symbol_max, symbol_max).detach();
        r.symbols = sym.to(torch::kInt32);
        r.values = sym * s;
    } else {
        r.values = y + (torch::rand_like(y) - 0.5) * s;
    }
    return r;
}

torch::Tensor dequantize(const torch::Tensor& symbols, const torch::Tensor& steps) {
    return symbols.to(steps.dtype()) * steps.view({1, -1, 1, 1});
}

DeadCodeTracker::DeadCodeTracker(std::int64_t codebook_size, int patience)
    : patience_(patience),
      used_(static_cast<std::size_t>(codebook_size), false),
      idle_(static_cast<std::size_t>(codebook_size), 0) {}

void DeadCodeTracker::observe(const torch::Tensor& indices) {
    auto flat = indices.reshape({-1}).to(torch::kInt64).contiguous();
    const auto* p = flat.data_ptr<std::int64_t>();
    for (std::int64_t i = 0; i < flat.numel(); ++i) used_[static_cast<std::size_t>(p[i])] = true;
}

int DeadCodeTracker::end_epoch(torch::Tensor& codebook, const torch::Tensor& samples, std::mt19937_64& rng) {
    int replaced = 0;
    torch::NoGradGuard guard;
    for (std::size_t k = 0; k < used_.size(); ++k) {
        idle_[k] = used_[k] ? 0 : idle_[k] + 1;
        used_[k] = false;
        if (idle_[k] >= patience_ && samples.defined() && samples.size(0) > 0) {
            const auto pick = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(samples.size(0)));
            codebook[static_cast<std::int64_t>(k)].copy_(samples[pick]);
            idle_[k] = 0;
            ++replaced;
        }
    }
    return replaced;
}

}  // namespace dlf::quant
