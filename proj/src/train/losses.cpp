#include "dlf/train/losses.hpp"

#include <cmath>
#include <random>

#include "dlf/error.hpp"
#include "dlf/quant/quant.hpp"

namespace dlf::train {

namespace {

double value_of(const torch::Tensor& t) { return t.defined() ? t.detach().to(torch::kFloat64).item<double>() : 0.0; }

torch::Tensor as_double(const torch::Tensor& t) {
    return t.defined() ? t.to(torch::kFloat64) : torch::zeros({}, torch::kFloat64);
}

}  // namespace

double LossReport::weighted_sum() const {
    return distortion + perceptual_weight * perceptual + lambda_adv * adversarial + codebook + rate_weight * bpp;
}

LossReport combine(const LossParts& p, const LossWeights& w, std::int64_t step) {
    for (const auto* t : {&p.distortion, &p.perceptual, &p.adversarial, &p.codebook, &p.bpp})
        require(!t->defined() || t->numel() == 1, ErrorKind::shape, "loss parts must be scalars");
    LossReport r;
    r.distortion = value_of(p.distortion);
    r.perceptual = value_of(p.perceptual);
    r.adversarial = value_of(p.adversarial);
    r.codebook = value_of(p.codebook);
    r.bpp = value_of(p.bpp);
    r.rate_bits = p.rate_bits;
    r.perceptual_weight = w.perceptual;
    r.lambda_adv = w.adversarial;
    r.rate_weight = w.rate;
    r.step = step;
    // Same operation order as weighted_sum so the logged total is exact.
    r.total = as_double(p.distortion) + w.perceptual * as_double(p.perceptual) +
              w.adversarial * as_double(p.adversarial) + as_double(p.codebook) + w.rate * as_double(p.bpp);
    r.total = r.total.reshape({});
    return r;
}

LossReport stage1_loss(const torch::Tensor& h_hat, const torch::Tensor& h_tilde, const torch::Tensor& bpp,
                       double lambda, double rate_scale, double rate_bits) {
    require(h_hat.sizes() == h_tilde.sizes(), ErrorKind::shape, "h_hat and h_tilde differ in shape");
    LossParts p;
    p.distortion = (h_hat - h_tilde).pow(2).mean();
    p.bpp = bpp;
    p.rate_bits = rate_bits;
    return combine(p, {0.0, 0.0, lambda * rate_scale});
}

PerceptualPyramidImpl::PerceptualPyramidImpl(int levels, int channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, 1.0f);
    int in = 3;
    for (int l = 0; l < levels; ++l) {
        auto w = torch::empty({channels, in, 3, 3});
        auto* p = w.data_ptr<float>();
        const float gain = 1.0f / std::sqrt(static_cast<float>(in * 9));
        for (std::int64_t i = 0; i < w.numel(); ++i) p[i] = n(rng) * gain;
        weights.push_back(register_buffer("w" + std::to_string(l), w));
        in = channels;
    }
}

std::vector<torch::Tensor> PerceptualPyramidImpl::features(const torch::Tensor& x) {
    std::vector<torch::Tensor> out;
    auto f = x - 0.5;
    for (const auto& w : weights) {
        f = torch::relu(torch::conv2d(f, w, {}, 2, 1));
        out.push_back(f);
    }
    return out;
}

torch::Tensor PerceptualPyramidImpl::distance(const torch::Tensor& x, const torch::Tensor& y) {
    require(x.sizes() == y.sizes(), ErrorKind::shape, "perceptual inputs differ in shape");
    const auto fx = features(x), fy = features(y);
    auto d = torch::zeros({}, x.options());
    for (std::size_t i = 0; i < fx.size(); ++i) d = d + (fx[i] - fy[i]).pow(2).mean();
    return d;
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int c) {
    namespace nn = torch::nn;
    net = register_module(
        "net", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, c, 4).stride(2).padding(1)),
                              nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)),
                              nn::Conv2d(nn::Conv2dOptions(c, 2 * c, 4).stride(2).padding(1)),
                              nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)),
                              nn::Conv2d(nn::Conv2dOptions(2 * c, 1, 3).padding(1))));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) { return net->forward(x * 2.0 - 1.0); }

torch::Tensor discriminator_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits) {
    return torch::relu(1.0 - real_logits).mean() + torch::relu(1.0 + fake_logits).mean();
}

torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_logits) { return -fake_logits.mean(); }

LossReport stage2_loss(const torch::Tensor& x, const torch::Tensor& x_hat, const torch::Tensor& y_s,
                       const torch::Tensor& q_s, const torch::Tensor& bpp, const Stage2Weights& w,
                       PerceptualPyramid pyramid, PatchDiscriminator discriminator, double rate_bits,
                       const torch::Tensor& extra_codebook) {
    require(x.sizes() == x_hat.sizes(), ErrorKind::shape, "x and x_hat differ in shape");
    LossParts p;
    p.distortion = (x - x_hat).abs().mean();
    if (pyramid) p.perceptual = pyramid->distance(x, x_hat);
    if (discriminator) p.adversarial = generator_adversarial_loss(discriminator->forward(x_hat));
    if (y_s.defined()) p.codebook = quant::codebook_loss(y_s, q_s, w.beta);
    if (extra_codebook.defined()) p.codebook = p.codebook.defined() ? p.codebook + extra_codebook : extra_codebook;
    p.bpp = bpp;
    p.rate_bits = rate_bits;
    return combine(p, {pyramid ? w.perceptual : 0.0, discriminator ? w.lambda_adv : 0.0, w.lambda * w.rate_scale});
}

}  // namespace dlf::train
