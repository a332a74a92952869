#pragma once

#include <string>

#include <torch/torch.h>

#include "dlf/entropy/context_model.hpp"
#include "dlf/io/image.hpp"
#include "dlf/net/config.hpp"
#include "dlf/net/layers.hpp"

namespace dlf::net {

struct EncoderOutput {
    torch::Tensor y_s;  // (B, N, T, C)
    torch::Tensor y_d;  // (B, C_d, h/2, w/2)
};

struct DecoderOutput {
    torch::Tensor h_s;  // (B, C, h, w)
    torch::Tensor h_d;  // (B, C, h, w)
};

// Which training group a parameter belongs to, decided by its name prefix.
enum class ParamGroup { semantic, detail, interaction, adaptor, generator, auxiliary };

const char* to_string(ParamGroup g);
ParamGroup param_group(const std::string& name);

// Conv upsampler: four (ResBlock, nearest x2, conv) stages from C channels at
// 1/16 resolution down to RGB.
struct GeneratorImpl : torch::nn::Module {
    GeneratorImpl(int in_channels, const std::vector<int>& channels);
    torch::Tensor forward(const torch::Tensor& h);

    torch::nn::Conv2d conv_in{nullptr}, conv_out{nullptr};
    torch::nn::ModuleList res{nullptr}, up{nullptr};
    torch::nn::GroupNorm norm_out{nullptr};
};
TORCH_MODULE(Generator);

// Mirror of the generator: four stride-2 stages down to C channels, with a
// parameter-free channel LayerNorm on the output so targets have unit scale.
struct AuxEncoderImpl : torch::nn::Module {
    AuxEncoderImpl(int out_channels, const std::vector<int>& channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv_in{nullptr}, conv_out{nullptr};
    torch::nn::ModuleList down{nullptr}, res{nullptr};
    torch::nn::GroupNorm norm_out{nullptr};
    torch::nn::LayerNorm ln_out{nullptr};
};
TORCH_MODULE(AuxEncoder);

struct DLFModelImpl : torch::nn::Module {
    explicit DLFModelImpl(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    // (B, 3, H, W) -> (B, C, H/16, W/16).
    torch::Tensor embed(const torch::Tensor& x);
    EncoderOutput dual_encode(const torch::Tensor& emb);
    EncoderOutput encode(const torch::Tensor& x) { return dual_encode(embed(x)); }

    // kept_tokens: 1-D tokens per window that carry data; later ones are
    // replaced by the mask token. 0 means the configured count.
    DecoderOutput dual_decode(const torch::Tensor& yq_s, const torch::Tensor& yq_d, int kept_tokens = 0);
    torch::Tensor fuse(const torch::Tensor& h_d, const torch::Tensor& h_s);
    // Raw generator output (unclamped), for training.
    torch::Tensor synthesize(const torch::Tensor& h_hat) { return generator(h_hat); }
    torch::Tensor auxiliary(const torch::Tensor& x) { return aux(x); }

    // exp of the learned log-steps, one per detail channel.
    torch::Tensor steps() const { return det_log_step.exp(); }

    // Semantic windows of a grid: (B, C, h, w) -> (B * N, W^2, C).
    torch::Tensor to_windows(const torch::Tensor& grid) const;
    torch::Tensor from_windows(const torch::Tensor& windows, std::int64_t b, std::int64_t h, std::int64_t w) const;

    // Interactive transforms run unless the variant disables them; tests
    // may toggle this directly.
    bool interaction = true;

    torch::nn::Conv2d sem_embed{nullptr};
    torch::Tensor sem_enc_grid_pos, sem_enc_tokens;
    torch::nn::ModuleList sem_enc_blocks{nullptr}, det_enc_blocks{nullptr}, it_enc{nullptr};
    torch::nn::LayerNorm sem_enc_ln{nullptr}, det_enc_ln{nullptr};
    torch::nn::Linear sem_enc_out{nullptr};
    torch::nn::Conv2d det_down{nullptr};

    torch::nn::Linear sem_dec_in{nullptr}, sem_dec_out{nullptr};
    torch::Tensor sem_dec_token_pos, sem_dec_placeholder, sem_dec_mask_token;
    torch::nn::ModuleList sem_dec_blocks{nullptr}, det_dec_blocks{nullptr}, it_dec{nullptr};
    torch::nn::LayerNorm sem_dec_ln{nullptr}, det_dec_ln{nullptr};
    torch::nn::ConvTranspose2d det_up{nullptr};
    torch::nn::Conv2d det_dec_out{nullptr};

    torch::nn::Conv2d adaptor_in{nullptr}, adaptor_out{nullptr};
    torch::nn::ModuleList adaptor_blocks{nullptr};

    Generator generator{nullptr};
    AuxEncoder aux{nullptr};

    torch::Tensor sem_codebook;   // (K, C)
    torch::Tensor det_codebook;   // (K_d, C_d), vq_detail only
    torch::Tensor det_log_step;   // (C_d)
    entropy::ContextModel det_entropy{nullptr};

private:
    ModelConfig cfg_;
};
TORCH_MODULE(DLFModel);

// (3, H, W) image <-> (1, 3, H, W) tensor.
torch::Tensor to_tensor(const Image& image);
Image to_image(const torch::Tensor& chw);

// Generator output clamped to [0, 1] and cropped to the original size.
Image generate(DLFModel& model, const torch::Tensor& h_hat, int orig_h, int orig_w);

// Sets requires_grad on every parameter of the listed groups and clears it
// everywhere else.
void set_trainable(DLFModel& model, std::initializer_list<ParamGroup> groups);

}  // namespace dlf::net
