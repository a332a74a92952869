#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace dlf::train {

// One training step's objective. `total` is differentiable; the scalar
// fields are the logged parts, and
//   total = distortion + perceptual_weight * perceptual
//         + lambda_adv * adversarial + codebook + rate_weight * bpp
// holds exactly in double precision (see weighted_sum).
struct LossReport {
    torch::Tensor total;
    double distortion = 0.0;
    double perceptual = 0.0;
    double adversarial = 0.0;
    double codebook = 0.0;
    double rate_bits = 0.0;  // estimated detail bits of the batch
    double bpp = 0.0;        // rate_bits over the batch's pixels
    double perceptual_weight = 0.0;
    double lambda_adv = 0.0;
    double rate_weight = 0.0;  // lambda * rate_scale
    std::int64_t step = 0;

    double total_value() const { return total.item<double>(); }
    double weighted_sum() const;
};

// Builds the report from differentiable parts; every part is a scalar
// tensor (undefined means zero). The sum is carried out in double.
struct LossParts {
    torch::Tensor distortion, perceptual, adversarial, codebook, bpp;
    double rate_bits = 0.0;
};
struct LossWeights {
    double perceptual = 0.0;
    double adversarial = 0.0;
    double rate = 0.0;
};
LossReport combine(const LossParts& parts, const LossWeights& w, std::int64_t step = 0);

// Latent alignment: MSE(h_hat, h_tilde) + lambda * rate_scale * bpp.
LossReport stage1_loss(const torch::Tensor& h_hat, const torch::Tensor& h_tilde, const torch::Tensor& bpp,
                       double lambda, double rate_scale = 1.0, double rate_bits = 0.0);

// Fixed multi-scale feature extractor: each level is a stride-2 3x3 conv
// with seeded Gaussian weights followed by a ReLU. Parameters are buffers,
// never trained.
struct PerceptualPyramidImpl : torch::nn::Module {
    explicit PerceptualPyramidImpl(int levels = 3, int channels = 16, std::uint64_t seed = 0x5eed);
    std::vector<torch::Tensor> features(const torch::Tensor& x);
    // Sum over levels of the feature MSE.
    torch::Tensor distance(const torch::Tensor& x, const torch::Tensor& y);
    std::vector<torch::Tensor> weights;
};
TORCH_MODULE(PerceptualPyramid);

// Small patch discriminator for the optional adversarial term.
struct PatchDiscriminatorImpl : torch::nn::Module {
    explicit PatchDiscriminatorImpl(int channels = 32);
    torch::Tensor forward(const torch::Tensor& x);
    torch::nn::Sequential net{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

// Hinge losses.
torch::Tensor discriminator_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits);
torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_logits);

struct Stage2Weights {
    double perceptual = 1.0;
    double lambda_adv = 0.8;
    double beta = 0.25;
    double lambda = 5.8;
    double rate_scale = 1.0;
};

// Pixel fine-tune: L1(x, x_hat) + perceptual + lambda_adv * adversarial
// + codebook_loss(y_s, q_s, beta) + lambda * rate_scale * bpp. A null
// pyramid or discriminator drops that term. `extra_codebook` adds further
// codebook terms (the detail codebook of vq_detail).
LossReport stage2_loss(const torch::Tensor& x, const torch::Tensor& x_hat, const torch::Tensor& y_s,
                       const torch::Tensor& q_s, const torch::Tensor& bpp, const Stage2Weights& w,
                       PerceptualPyramid pyramid, PatchDiscriminator discriminator, double rate_bits = 0.0,
                       const torch::Tensor& extra_codebook = {});

}  // namespace dlf::train
