#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <torch/torch.h>

namespace dlf::quant {

struct VqResult {
    torch::Tensor indices;    // int64, y.shape[:-1]
    torch::Tensor quantized;  // codebook rows, y.shape; differentiable w.r.t. the codebook
};

// Nearest codebook row under Euclidean distance; ties go to the lowest
// index. Distances are evaluated in double precision. y: (..., C),
// codebook: (K, C).
VqResult vq_assign(const torch::Tensor& y, const torch::Tensor& codebook);

torch::Tensor vq_lookup(const torch::Tensor& indices, const torch::Tensor& codebook);

// y + sg(q - y): forward value q, gradient copied to y.
torch::Tensor straight_through(const torch::Tensor& y, const torch::Tensor& q);

// mean_t ||sg(y_t) - q_t|| + beta * mean_t ||sg(q_t) - y_t||, where t runs over
// tokens (the last dimension is the token vector) and ||.|| is the plain L2
// norm. The norm's gradient at zero is taken as zero.
torch::Tensor codebook_loss(const torch::Tensor& y, const torch::Tensor& q, double beta = 0.25);

// round() with halves going away from zero.
torch::Tensor round_half_away(const torch::Tensor& v);

enum class SqMode { round, noise };

struct SqResult {
    torch::Tensor symbols;  // int32 in round mode; undefined in noise mode
    torch::Tensor values;   // dequantized (round) or noisy (noise) values
};

// Per-channel scalar quantization of (B, C, H, W) with steps (C). Round mode
// clips symbols to [-symbol_max, symbol_max]; noise mode adds u * step with u
// uniform in [-1/2, 1/2] drawn from torch's default generator.
SqResult sq_quantize(const torch::Tensor& y, const torch::Tensor& steps, SqMode mode, int symbol_max);
torch::Tensor dequantize(const torch::Tensor& symbols, const torch::Tensor& steps);

// Re-seeds codebook rows that went unused for `patience` consecutive epochs.
class DeadCodeTracker {
public:
    DeadCodeTracker(std::int64_t codebook_size, int patience = 5);

    void observe(const torch::Tensor& indices);
    // Closes an epoch; idle rows are replaced by rows drawn from `samples`
    // (M, C). Returns the number of rows replaced.
    int end_epoch(torch::Tensor& codebook, const torch::Tensor& samples, std::mt19937_64& rng);

    const std::vector<int>& idle_epochs() const { return idle_; }

private:
    int patience_;
    std::vector<bool> used_;
    std::vector<int> idle_;
};

}  // namespace dlf::quant
