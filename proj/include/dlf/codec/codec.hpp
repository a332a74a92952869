#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <torch/torch.h>

#include "dlf/bits/container.hpp"
#include "dlf/io/image.hpp"
#include "dlf/net/model.hpp"

namespace dlf::codec {

// Grid geometry implied by the original image size: the image is padded to a
// whole number of semantic windows (16 * window pixels per side).
struct Layout {
    int orig_h = 0, orig_w = 0;
    int padded_h = 0, padded_w = 0;
    int h = 0, w = 0;    // embedded grid
    int h2 = 0, w2 = 0;  // detail grid
    int windows = 0;

    static Layout of(const net::ModelConfig& cfg, int orig_h, int orig_w);
};

// Everything the bitstream carries, before entropy coding.
struct QuantizedLatents {
    Layout layout;
    std::vector<std::uint32_t> semantic_indices;  // windows x kept tokens, window-major
    std::vector<int> detail_symbols;              // C_d x h2 x w2 (SQ variants)
    std::vector<std::uint32_t> detail_indices;    // h2 x w2 (vq_detail)
};

// Called once per coded group with the predicted (mu, scale) of each
// position of the group, in schedule order.
using GroupObserver = std::function<void(int group, const std::vector<float>& mu, const std::vector<float>& scale)>;

// Runs the encoder and both quantizers (eval mode, no gradients).
QuantizedLatents quantize(net::DLFModel& model, const Image& image);

// Dequantized latents as (1, N, T, C) and (1, C_d, h2, w2) tensors.
std::pair<torch::Tensor, torch::Tensor> dequantize(net::DLFModel& model, const QuantizedLatents& q);
// Fused latent h_hat from quantized latents.
torch::Tensor reconstruct_latent(net::DLFModel& model, const QuantizedLatents& q);
// Full reconstruction at the original size.
Image reconstruct(net::DLFModel& model, const QuantizedLatents& q);

// Quadtree-ordered range coding of detail symbols (C_d x h2 x w2, CHW order).
std::vector<std::uint8_t> encode_detail(net::DLFModel& model, std::span<const int> symbols, int h2, int w2,
                                        const GroupObserver& observer = {});
std::vector<int> decode_detail(net::DLFModel& model, std::span<const std::uint8_t> payload, int h2, int w2,
                               const GroupObserver& observer = {});
// Ideal code length (bits) of the symbols under the coding PMFs.
double estimate_detail_bits(net::DLFModel& model, std::span<const int> symbols, int h2, int w2);

bits::BitContainer serialize(net::DLFModel& model, const QuantizedLatents& q, int lambda_index);
// Checks the container against the model (lambda index, payload sizes).
QuantizedLatents deserialize(net::DLFModel& model, const bits::BitContainer& c, int lambda_index);

std::vector<std::uint8_t> encode_image(net::DLFModel& model, const Image& image, int lambda_index);
Image decode_image(net::DLFModel& model, std::span<const std::uint8_t> bytes, int lambda_index);

// Container bits over original pixels, header included.
double compute_bpp(const bits::BitContainer& c);

}  // namespace dlf::codec
