#include "dlf/train/config.hpp"

#include <cmath>
#include <sstream>

#include "dlf/error.hpp"

namespace dlf::train {

namespace {

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string num(double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
}

std::vector<int> default_kept(int tokens) {
    return {tokens, std::max(1, tokens * 3 / 4), std::max(1, tokens / 2), std::max(1, tokens / 4)};
}

const std::vector<int> kDefaultDetailCodebooks = {256, 64, 16, 4};

}  // namespace

LambdaSchedule LambdaSchedule::scaled(double factor) const {
    LambdaSchedule s = *this;
    s.warmup_steps = std::llround(static_cast<double>(warmup_steps) * factor);
    s.ramp_steps = std::max<std::int64_t>(1, std::llround(static_cast<double>(ramp_steps) * factor));
    s.hold_steps = std::llround(static_cast<double>(hold_steps) * factor);
    return s;
}

double LambdaSchedule::at(std::int64_t step) const {
    require(step >= 0, ErrorKind::invalid_input, "negative step");
    if (step < warmup_steps) return warmup_value;
    const auto into = step - warmup_steps;
    if (into >= ramp_steps) return ramp_end;
    return ramp_start + (ramp_end - ramp_start) * static_cast<double>(into) / static_cast<double>(ramp_steps);
}

double TrainConfig::stage_lr() const {
    if (lr > 0.0) return lr;
    switch (stage) {
        case 0: return 2e-3;
        case 1: return 5e-4;
        default: return 1e-4;
    }
}

double TrainConfig::stage2_lambda() const {
    return lambda >= 0.0 ? lambda : kStage2Lambdas[static_cast<std::size_t>(lambda_index)];
}

std::int64_t TrainConfig::total_steps() const {
    switch (stage) {
        case 0: return ae_steps + tokenizer_steps;
        case 1: return steps > 0 ? steps : schedule.total_steps();
        default: return steps;
    }
}

net::ModelConfig TrainConfig::model_for_lambda(const net::ModelConfig& base) const {
    net::ModelConfig m = base;
    m.variant = model.variant;
    m.kept_tokens = 0;
    const auto i = static_cast<std::size_t>(lambda_index);
    if (m.variant == net::Variant::no_detail && stage == 2) {
        const auto grid = kept_tokens_grid.empty() ? default_kept(m.tokens) : kept_tokens_grid;
        require(i < grid.size(), ErrorKind::config, "train.kept_tokens_grid has no entry for the lambda index");
        m.kept_tokens = grid[i] == m.tokens ? 0 : grid[i];
    }
    if (m.variant == net::Variant::vq_detail) {
        const auto& grid = detail_codebook_grid.empty() ? kDefaultDetailCodebooks : detail_codebook_grid;
        require(i < grid.size(), ErrorKind::config, "train.detail_codebook_grid has no entry for the lambda index");
        m.detail_codebook_size = static_cast<std::uint32_t>(grid[i]);
    }
    return m;
}

void TrainConfig::validate() const {
    require(stage >= 0 && stage <= 2, ErrorKind::config, "train.stage must be 0, 1 or 2");
    model.validate();
    data.validate();
    require(data.crop % model.window_pixels() == 0, ErrorKind::config,
            "data.crop must be a multiple of the window size in pixels (" + std::to_string(model.window_pixels()) + ")");
    require(lambda_index >= 0 && lambda_index < 256, ErrorKind::config, "train.lambda_index out of range");
    require(stage != 2 || lambda >= 0.0 || lambda_index < static_cast<int>(kStage2Lambdas.size()), ErrorKind::config,
            "train.lambda_index has no default lambda; set train.lambda");
    require(beta >= 0.0 && rate_scale >= 0.0 && perceptual_weight >= 0.0 && lambda_adv >= 0.0, ErrorKind::config,
            "loss weights must be >= 0");
    require(schedule.warmup_value >= 0.0 && schedule.ramp_start >= 0.0 && schedule.ramp_end >= 0.0,
            ErrorKind::config, "lambda schedule values must be >= 0");
    require(step_scale > 0.0, ErrorKind::config, "train.step_scale must be > 0");
    require(ae_steps >= 0 && tokenizer_steps >= 0 && steps >= 0, ErrorKind::config, "step counts must be >= 0");
    require(stage != 2 || steps > 0, ErrorKind::config, "stage 2 needs train.steps > 0");
    require(batch >= 1, ErrorKind::config, "train.batch must be >= 1");
    require(save_every >= 0, ErrorKind::config, "train.save_every must be >= 0");
    require(!out.empty(), ErrorKind::config, "train.out (checkpoint path) is required");
    for (int k : kept_tokens_grid)
        require(k >= 1 && k <= model.tokens, ErrorKind::config, "train.kept_tokens_grid entries must be in [1, tokens]");
    for (int k : detail_codebook_grid) require(k >= 1, ErrorKind::config, "train.detail_codebook_grid entries must be >= 1");
}

const std::set<std::string>& TrainConfig::keys() {
    static const std::set<std::string> k = [] {
        std::set<std::string> s = {
            "train.stage",           "train.ae_steps",         "train.tokenizer_steps",  "train.steps",
            "train.step_scale",      "train.lambda_warmup",    "train.lambda_ramp_start", "train.lambda_ramp_end",
            "train.warmup_steps",    "train.ramp_steps",       "train.hold_steps",       "train.lambda_index",
            "train.lambda",          "train.rate_scale",       "train.beta",             "train.perceptual_weight",
            "train.adversarial",     "train.lambda_adv",       "train.kept_tokens_grid", "train.detail_codebook_grid",
            "train.batch",           "train.lr",               "train.discriminator_lr", "train.seed",
            "train.save_every",      "train.resume",           "train.init",             "train.out",
            "train.trace",           "data.root",              "data.crop",              "data.split",
            "data.seed",             "data.max_images"};
        s.insert(net::ModelConfig::keys().begin(), net::ModelConfig::keys().end());
        return s;
    }();
    return k;
}

TrainConfig TrainConfig::from_keys(const io::KeyValueConfig& cfg) {
    cfg.require_known(keys());
    TrainConfig t;
    t.stage = static_cast<int>(cfg.get_int("train.stage", t.stage));
    t.model = net::ModelConfig::from_keys(cfg);
    t.data.root = cfg.get_string("data.root", "toy:250");
    t.data.crop = static_cast<int>(cfg.get_int("data.crop", t.data.crop));
    const auto split = cfg.get_doubles("data.split", {t.data.split.begin(), t.data.split.end()});
    require(split.size() == 3, ErrorKind::config, "data.split needs three ratios (train, val, test)");
    std::copy(split.begin(), split.end(), t.data.split.begin());
    t.data.seed = static_cast<std::uint64_t>(cfg.get_int("data.seed", 0));
    t.data.max_images = static_cast<int>(cfg.get_int("data.max_images", 0));

    t.ae_steps = cfg.get_int("train.ae_steps", t.ae_steps);
    t.tokenizer_steps = cfg.get_int("train.tokenizer_steps", t.tokenizer_steps);
    t.steps = cfg.get_int("train.steps", t.steps);
    t.step_scale = cfg.get_double("train.step_scale", t.step_scale);
    LambdaSchedule s;
    s.warmup_value = cfg.get_double("train.lambda_warmup", s.warmup_value);
    s.ramp_start = cfg.get_double("train.lambda_ramp_start", s.ramp_start);
    s.ramp_end = cfg.get_double("train.lambda_ramp_end", s.ramp_end);
    s.warmup_steps = cfg.get_int("train.warmup_steps", s.warmup_steps);
    s.ramp_steps = cfg.get_int("train.ramp_steps", s.ramp_steps);
    s.hold_steps = cfg.get_int("train.hold_steps", s.hold_steps);
    require(t.step_scale > 0.0, ErrorKind::config, "train.step_scale must be > 0");
    t.schedule = s.scaled(t.step_scale);

    t.lambda_index = static_cast<int>(cfg.get_int("train.lambda_index", t.lambda_index));
    t.lambda = cfg.get_double("train.lambda", t.lambda);
    t.rate_scale = cfg.get_double("train.rate_scale", t.rate_scale);
    t.beta = cfg.get_double("train.beta", t.beta);
    t.perceptual_weight = cfg.get_double("train.perceptual_weight", t.perceptual_weight);
    t.adversarial = cfg.get_bool("train.adversarial", t.adversarial);
    t.lambda_adv = cfg.get_double("train.lambda_adv", t.lambda_adv);
    t.kept_tokens_grid = cfg.get_ints("train.kept_tokens_grid", {});
    t.detail_codebook_grid = cfg.get_ints("train.detail_codebook_grid", {});
    t.batch = static_cast<int>(cfg.get_int("train.batch", t.batch));
    t.lr = cfg.get_double("train.lr", t.lr);
    t.discriminator_lr = cfg.get_double("train.discriminator_lr", t.discriminator_lr);
    t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
    t.save_every = static_cast<int>(cfg.get_int("train.save_every", t.save_every));
    t.resume = cfg.get_bool("train.resume", t.resume);
    t.init = cfg.get_string("train.init", "");
    t.out = cfg.get_string("train.out", "");
    t.trace = cfg.get_string("train.trace", "");
    return t;
}

io::KeyValueConfig TrainConfig::to_keys() const {
    io::KeyValueConfig c;
    const auto mj = model.to_json();
    for (const auto& [k, v] : mj.items()) {
        std::string text;
        if (v.is_array()) text = join(v.get<std::vector<int>>());
        else if (v.is_string()) text = v.get<std::string>();
        else if (v.is_boolean()) text = v.get<bool>() ? "true" : "false";
        else text = v.dump();
        c.set("model." + k, text);
    }
    c.set("data.root", data.root);
    c.set("data.crop", std::to_string(data.crop));
    c.set("data.split", num(data.split[0]) + "," + num(data.split[1]) + "," + num(data.split[2]));
    c.set("data.seed", std::to_string(data.seed));
    c.set("data.max_images", std::to_string(data.max_images));
    c.set("train.stage", std::to_string(stage));
    c.set("train.ae_steps", std::to_string(ae_steps));
    c.set("train.tokenizer_steps", std::to_string(tokenizer_steps));
    c.set("train.steps", std::to_string(steps));
    // The schedule is stored already scaled.
    c.set("train.step_scale", "1");
    c.set("train.lambda_warmup", num(schedule.warmup_value));
    c.set("train.lambda_ramp_start", num(schedule.ramp_start));
    c.set("train.lambda_ramp_end", num(schedule.ramp_end));
    c.set("train.warmup_steps", std::to_string(schedule.warmup_steps));
    c.set("train.ramp_steps", std::to_string(schedule.ramp_steps));
    c.set("train.hold_steps", std::to_string(schedule.hold_steps));
    c.set("train.lambda_index", std::to_string(lambda_index));
    c.set("train.lambda", num(lambda));
    c.set("train.rate_scale", num(rate_scale));
    c.set("train.beta", num(beta));
    c.set("train.perceptual_weight", num(perceptual_weight));
    c.set("train.adversarial", adversarial ? "true" : "false");
    c.set("train.lambda_adv", num(lambda_adv));
    c.set("train.kept_tokens_grid", join(kept_tokens_grid));
    c.set("train.detail_codebook_grid", join(detail_codebook_grid));
    c.set("train.batch", std::to_string(batch));
    c.set("train.lr", num(lr));
    c.set("train.discriminator_lr", num(discriminator_lr));
    c.set("train.seed", std::to_string(seed));
    c.set("train.save_every", std::to_string(save_every));
    c.set("train.resume", resume ? "true" : "false");
    c.set("train.init", init);
    c.set("train.out", out);
    c.set("train.trace", trace);
    return c;
}

}  // namespace dlf::train
