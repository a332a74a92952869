#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dlf/io/dataset.hpp"
#include "dlf/net/checkpoint.hpp"
#include "dlf/train/config.hpp"
#include "dlf/train/losses.hpp"

namespace dlf::train {

// One CSV row of the loss trace.
struct TraceRow {
    std::int64_t step = 0;
    std::string phase;  // ae, tokenizer, align, finetune
    double lambda = 0.0;
    double total = 0.0, distortion = 0.0, perceptual = 0.0, adversarial = 0.0, codebook = 0.0;
    double rate_bits = 0.0, bpp = 0.0;

    bool operator==(const TraceRow&) const = default;
};

inline constexpr const char* kTraceHeader = "step,phase,lambda,total,distortion,perceptual,adversarial,codebook,rate_bits,bpp";
std::string format_trace_row(const TraceRow& r);
std::vector<TraceRow> read_trace(const std::filesystem::path& path);

struct TrainHooks {
    // Called after every optimizer step; returning false stops the run
    // after the checkpoint is saved (used to exercise resume).
    std::function<bool(const TraceRow&)> on_step;
};

struct TrainResult {
    std::filesystem::path checkpoint;
    std::int64_t first_step = 0;  // 0 unless resumed
    std::int64_t steps_done = 0;  // completed steps in the checkpoint
    bool finished = false;
    nlohmann::json summary;       // held-out measurements, also stored in the manifest
};

// Runs one stage. Stages 1 and 2 require `cfg.init` to name a checkpoint
// of the preceding stage; anything else is a checkpoint_mismatch error.
// With cfg.resume an existing checkpoint at cfg.out of the same stage and
// lambda index is continued from its step.
TrainResult run_training(const TrainConfig& cfg, const io::Dataset& data, const TrainHooks& hooks = {});
TrainResult run_training(const TrainConfig& cfg, const TrainHooks& hooks = {});

// Copies every tensor of `src` whose name and shape exist in `dst`; returns
// the names of `dst` tensors left untouched.
std::vector<std::string> copy_matching(net::DLFModel& dst, net::DLFModel& src);

// Stacks equally sized images into a (B, 3, H, W) tensor.
torch::Tensor stack_images(const std::vector<Image>& images);

}  // namespace dlf::train
