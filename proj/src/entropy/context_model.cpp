#include "dlf/entropy/context_model.hpp"

#include <cmath>

#include "dlf/entropy/cdf.hpp"
#include "dlf/error.hpp"

namespace dlf::entropy {

namespace {

constexpr double kMinScale = 0.05;
// Symbols enter the context nets scaled down so typical magnitudes are O(1).
constexpr double kContextGain = 0.25;

torch::Tensor lower_cdf(const torch::Tensor& z) {
    return torch::where(z < 0, 0.5 * torch::exp(torch::clamp_max(z, 0.0)),
                        1.0 - 0.5 * torch::exp(-torch::clamp_min(z, 0.0)));
}

// Laplace mass of [lo, hi], mirrored into the lower half like the coder's
// double-precision version.
torch::Tensor interval_mass(const torch::Tensor& lo, const torch::Tensor& hi, const torch::Tensor& mu,
                            const torch::Tensor& scale) {
    auto a = (lo - mu) / scale;
    auto c = (hi - mu) / scale;
    auto flip = (a + c) > 0;
    auto a2 = torch::where(flip, -c, a);
    auto c2 = torch::where(flip, -a, c);
    return torch::clamp_min(lower_cdf(c2) - lower_cdf(a2), 0.0);
}

}  // namespace

torch::Tensor group_mask(int group, std::int64_t h, std::int64_t w, torch::Dtype dtype) {
    const auto& pat = kGroupPattern[static_cast<std::size_t>(group)];
    auto ys = torch::arange(h).remainder(2).eq(pat[0]).view({1, 1, h, 1});
    auto xs = torch::arange(w).remainder(2).eq(pat[1]).view({1, 1, 1, w});
    return (ys & xs).to(dtype);
}

torch::Tensor context_mask(int group, std::int64_t h, std::int64_t w, torch::Dtype dtype) {
    auto m = torch::zeros({1, 1, h, w}, dtype);
    for (int g = 0; g < group; ++g) m = m + group_mask(g, h, w, dtype);
    return m;
}

torch::Tensor laplace_bits(const torch::Tensor& value, const torch::Tensor& mu, const torch::Tensor& scale,
                           int symbol_max) {
    const double n = 2.0 * symbol_max + 1.0;
    auto mass = interval_mass(value - 0.5, value + 0.5, mu, scale);
    auto edge = torch::full_like(mu, symbol_max + 0.5);
    auto z = interval_mass(-edge, edge, mu, scale);
    auto p = kProbFloor + (1.0 - n * kProbFloor) * mass / z;
    return -torch::log2(p);
}

ContextModelImpl::ContextModelImpl(int channels_, int hidden, int symbol_max_)
    : channels(channels_), symbol_max(symbol_max_) {
    prior_mu = register_parameter("prior_mu", torch::zeros({channels}));
    prior_log_scale = register_parameter("prior_log_scale", torch::full({channels}, std::log(2.0)));
    nets = register_module("nets", torch::nn::ModuleList());
    for (int g = 1; g < kGroupCount; ++g) {
        torch::nn::Sequential net(
            torch::nn::Conv2d(torch::nn::Conv2dOptions(channels + 1, hidden, 3).padding(1)), torch::nn::GELU(),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, hidden, 3).padding(1)), torch::nn::GELU(),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, 2 * channels, 1)));
        nets->push_back(net);
    }
}

std::pair<torch::Tensor, torch::Tensor> ContextModelImpl::group_params(const torch::Tensor& symbols, int group) {
    require(group >= 0 && group < kGroupCount, ErrorKind::invalid_input, "group index out of range");
    require(symbols.dim() == 4 && symbols.size(1) == channels, ErrorKind::shape, "context symbols shape mismatch");
    const auto b = symbols.size(0), h = symbols.size(2), w = symbols.size(3);
    if (group == 0) {
        auto mu = prior_mu.view({1, -1, 1, 1}).expand({b, channels, h, w});
        auto scale = (kMinScale + torch::nn::functional::softplus(prior_log_scale)).view({1, -1, 1, 1});
        return {mu.clamp(-symbol_max, symbol_max), scale.expand({b, channels, h, w})};
    }
    auto mask = context_mask(group, h, w, symbols.scalar_type());
    auto input = torch::cat({symbols * mask * kContextGain, mask.expand({b, 1, h, w})}, 1);
    auto out = nets[static_cast<std::size_t>(group - 1)]->as<torch::nn::Sequential>()->forward(input);
    auto mu = out.narrow(1, 0, channels).clamp(-symbol_max, symbol_max);
    auto scale = kMinScale + torch::nn::functional::softplus(out.narrow(1, channels, channels));
    return {mu, scale};
}

std::pair<torch::Tensor, torch::Tensor> ContextModelImpl::predict(const PartialDetail& partial, int group) {
    for (int g = 0; g < group; ++g)
        require(partial.filled[static_cast<std::size_t>(g)], ErrorKind::causality,
                "group " + std::to_string(group) + " requested before group " + std::to_string(g) + " was decoded");
    return group_params(partial.symbols, group);
}

torch::Tensor ContextModelImpl::bits(const torch::Tensor& symbols) {
    const auto h = symbols.size(2), w = symbols.size(3);
    torch::Tensor mu, scale;
    for (int g = 0; g < kGroupCount; ++g) {
        auto [m, s] = group_params(symbols, g);
        auto gm = group_mask(g, h, w, symbols.scalar_type());
        mu = mu.defined() ? mu + m * gm : m * gm;
        scale = scale.defined() ? scale + s * gm : s * gm;
    }
    return laplace_bits(symbols, mu, scale, symbol_max);
}

}  // namespace dlf::entropy
