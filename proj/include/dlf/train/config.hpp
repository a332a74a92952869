#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "dlf/io/config.hpp"
#include "dlf/io/dataset.hpp"
#include "dlf/net/config.hpp"

namespace dlf::train {

// Stage-2 rate-distortion trade-offs, one checkpoint each. The index into
// this grid is the lambda_index carried by every container.
inline constexpr std::array<double, 4> kStage2Lambdas = {5.8, 8.5, 16.0, 28.0};

// Piecewise stage-1 weight: a small constant during warmup, a linear ramp,
// then a constant hold.
struct LambdaSchedule {
    double warmup_value = 0.001;
    double ramp_start = 2.0;
    double ramp_end = 24.0;
    std::int64_t warmup_steps = 10000;
    std::int64_t ramp_steps = 90000;
    std::int64_t hold_steps = 400000;

    // Multiplies every step count by `factor` (rounded, ramp at least 1).
    LambdaSchedule scaled(double factor) const;
    std::int64_t total_steps() const { return warmup_steps + ramp_steps + hold_steps; }
    double at(std::int64_t step) const;
};

struct TrainConfig {
    int stage = 0;
    net::ModelConfig model;
    io::DatasetSpec data;

    // Stage 0: autoencoder steps, then tokenizer steps.
    std::int64_t ae_steps = 1500;
    std::int64_t tokenizer_steps = 1000;
    // Stage 1 length comes from the schedule unless `steps` is set; stage 2
    // always uses `steps`.
    LambdaSchedule schedule;
    double step_scale = 1.0;
    std::int64_t steps = 0;

    int lambda_index = 0;
    double lambda = -1.0;  // stage 2; < 0 picks kStage2Lambdas[lambda_index]
    double rate_scale = 1.0;
    double beta = 0.25;
    double perceptual_weight = 1.0;
    bool adversarial = false;
    double lambda_adv = 0.8;
    // no_detail: kept tokens per lambda index; vq_detail: detail codebook
    // size per lambda index. Empty lists pick the built-in defaults.
    std::vector<int> kept_tokens_grid;
    std::vector<int> detail_codebook_grid;

    int batch = 8;
    double lr = 0.0;  // 0 picks the stage default
    double discriminator_lr = 2e-4;
    std::uint64_t seed = 0;
    int save_every = 500;
    bool resume = true;

    std::string init;   // prerequisite checkpoint (stages 1 and 2)
    std::string out;    // checkpoint written by this run
    std::string trace;  // loss trace CSV; empty means "<out>.trace.csv"

    double stage_lr() const;
    double stage2_lambda() const;
    std::int64_t total_steps() const;
    std::string trace_path() const { return trace.empty() ? out + ".trace.csv" : trace; }
    // Variant-specific rate knobs applied to a model config.
    net::ModelConfig model_for_lambda(const net::ModelConfig& base) const;

    void validate() const;

    static TrainConfig from_keys(const io::KeyValueConfig& cfg);
    static const std::set<std::string>& keys();
    // Effective configuration as key/value text, every key spelled out.
    io::KeyValueConfig to_keys() const;
};

}  // namespace dlf::train
