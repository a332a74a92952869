#pragma once

#include <array>
#include <utility>

#include <torch/torch.h>

#include "dlf/entropy/schedule.hpp"

namespace dlf::entropy {

// (1, 1, h, w) float mask of the positions belonging to `group`.
torch::Tensor group_mask(int group, std::int64_t h, std::int64_t w, torch::Dtype dtype = torch::kFloat32);
// Union of the masks of groups [0, group).
torch::Tensor context_mask(int group, std::int64_t h, std::int64_t w, torch::Dtype dtype = torch::kFloat32);

// Differentiable -log2 of the floored, renormalized discretized-Laplace mass
// of `value` (in symbol units) over the alphabet [-symbol_max, symbol_max].
// The integration interval is [value - 1/2, value + 1/2], which for integer
// values is the coding PMF and for noisy training values its continuous
// relaxation.
torch::Tensor laplace_bits(const torch::Tensor& value, const torch::Tensor& mu, const torch::Tensor& scale,
                           int symbol_max);

// Symbols decoded so far. `filled[g]` records that group g is complete;
// positions of unfilled groups carry arbitrary values and are never read.
struct PartialDetail {
    torch::Tensor symbols;  // (1, C, h, w) float
    std::array<bool, kGroupCount> filled{};
};

// Quadtree context model. Group 0 uses a learned per-channel prior; group
// k > 0 runs a small conv net over the symbols of groups < k (zeroed
// elsewhere) plus the context mask.
struct ContextModelImpl : torch::nn::Module {
    ContextModelImpl(int channels, int hidden, int symbol_max);

    // (mu, scale) over the whole grid as seen when coding `group`; only the
    // group's own positions are meaningful. `symbols` is (B, C, h, w) in
    // symbol units and is masked internally.
    std::pair<torch::Tensor, torch::Tensor> group_params(const torch::Tensor& symbols, int group);

    // Decoder-side entry point: refuses to predict a group whose
    // predecessors are not all filled.
    std::pair<torch::Tensor, torch::Tensor> predict(const PartialDetail& partial, int group);

    // Per-element bits for every position, each predicted from its own
    // group's context. Differentiable w.r.t. symbols and parameters.
    torch::Tensor bits(const torch::Tensor& symbols);

    int channels;
    int symbol_max;
    torch::Tensor prior_mu, prior_log_scale;
    torch::nn::ModuleList nets{nullptr};
};
TORCH_MODULE(ContextModel);

}  // namespace dlf::entropy
