#include "dlf/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "dlf/error.hpp"
#include "dlf/eval/metrics.hpp"
#include "dlf/eval/runner.hpp"
#include "dlf/quant/quant.hpp"

namespace dlf::train {

namespace fs = std::filesystem;
using net::ParamGroup;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

const char* phase_name(int stage, std::int64_t step, std::int64_t ae_steps) {
    if (stage == 0) return step < ae_steps ? "ae" : "tokenizer";
    return stage == 1 ? "align" : "finetune";
}

void save_torch_atomic(const fs::path& path, const std::function<void(const std::string&)>& save) {
    const auto tmp = path.string() + ".tmp";
    save(tmp);
    fs::rename(tmp, path);
}

// Detail quantization for training: additive noise (SQ) or straight-through
// VQ, with the estimated rate of the batch.
struct DetailOut {
    torch::Tensor values;   // what the decoder sees
    torch::Tensor bits;     // scalar, estimated detail bits of the batch
    torch::Tensor codebook; // vq_detail codebook loss, else undefined
};

DetailOut quantize_detail_train(net::DLFModel& m, const torch::Tensor& y_d, double beta) {
    const auto& cfg = m->config();
    DetailOut o;
    if (cfg.variant == net::Variant::no_detail) {
        o.values = torch::zeros_like(y_d);
        o.bits = torch::zeros({});
    } else if (cfg.variant == net::Variant::vq_detail) {
        auto vecs = y_d.permute({0, 2, 3, 1});
        auto r = quant::vq_assign(vecs, m->det_codebook);
        o.values = quant::straight_through(vecs, r.quantized).permute({0, 3, 1, 2});
        o.codebook = quant::codebook_loss(vecs, r.quantized, beta);
        const double per = std::log2(static_cast<double>(cfg.detail_codebook_size));
        o.bits = torch::full({}, per * static_cast<double>(r.indices.numel()));
    } else {
        auto steps = m->steps();
        auto noisy = quant::sq_quantize(y_d, steps, quant::SqMode::noise, cfg.symbol_max).values;
        o.values = noisy;
        o.bits = m->det_entropy->bits(noisy / steps.view({1, -1, 1, 1})).sum();
    }
    return o;
}

// Rows of a random token sample, used to seed codebooks.
torch::Tensor sample_rows(const torch::Tensor& rows, std::int64_t k, std::mt19937_64& rng) {
    const auto n = rows.size(0);
    auto idx = torch::empty({k}, torch::kInt64);
    for (std::int64_t i = 0; i < k; ++i) idx[i] = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
    return rows.index_select(0, idx);
}

class Trace {
public:
    Trace(const fs::path& path, std::int64_t keep_before) : path_(path) {
        std::vector<TraceRow> kept;
        if (keep_before > 0 && fs::exists(path))
            for (const auto& r : read_trace(path))
                if (r.step < keep_before) kept.push_back(r);
        std::string text = std::string(kTraceHeader) + "\n";
        for (const auto& r : kept) text += format_trace_row(r) + "\n";
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        io::write_file_atomic(path, std::vector<unsigned char>(text.begin(), text.end()));
        out_.open(path, std::ios::app);
        require(out_.good(), ErrorKind::io, "cannot open trace " + path.string());
    }
    void add(const TraceRow& r) {
        out_ << format_trace_row(r) << '\n';
        out_.flush();
    }

private:
    fs::path path_;
    std::ofstream out_;
};

class Trainer {
public:
    Trainer(const TrainConfig& cfg, const io::Dataset& data, const TrainHooks& hooks)
        : cfg_(cfg), data_(data), hooks_(hooks) {}

    TrainResult run();

private:
    void build_model();
    void maybe_resume();
    torch::Tensor batch(std::int64_t step, std::vector<std::int64_t>* indices = nullptr);
    TraceRow step_ae(std::int64_t step);
    TraceRow step_tokenizer(std::int64_t step);
    TraceRow step_align(std::int64_t step);
    TraceRow step_finetune(std::int64_t step);
    void start_phase(const std::string& phase);
    double phase_lr(std::int64_t step, std::int64_t total) const;
    void cache_targets();
    void init_semantic_codebook();
    void init_detail_codebook();
    void save(std::int64_t steps_done, bool final);
    nlohmann::json summarize();
    TraceRow row(std::int64_t step, const std::string& phase, double lambda, const LossReport& r) const;

    TrainConfig cfg_;
    const io::Dataset& data_;
    TrainHooks hooks_;
    net::DLFModel model_{nullptr};
    net::Manifest manifest_;
    torch::Tensor images_;   // (N, 3, H, W) training set
    torch::Tensor targets_;  // cached auxiliary features of the training set
    std::unique_ptr<torch::optim::Adam> opt_;
    PerceptualPyramid pyramid_{nullptr};
    PatchDiscriminator disc_{nullptr};
    std::unique_ptr<torch::optim::Adam> disc_opt_;
    std::unique_ptr<quant::DeadCodeTracker> dead_;
    std::string phase_;
    std::int64_t start_step_ = 0;
    bool resumed_ = false;
};

torch::Tensor Trainer::batch(std::int64_t step, std::vector<std::int64_t>* indices) {
    std::mt19937_64 rng(mix(cfg_.seed, static_cast<std::uint64_t>(step)));
    const auto n = images_.size(0);
    auto idx = torch::empty({cfg_.batch}, torch::kInt64);
    for (int i = 0; i < cfg_.batch; ++i) {
        idx[i] = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
        if (indices) indices->push_back(idx[i].item<std::int64_t>());
    }
    torch::manual_seed(mix(cfg_.seed ^ 0xA5A5A5A5ULL, static_cast<std::uint64_t>(step)));
    return images_.index_select(0, idx);
}

void Trainer::build_model() {
    if (cfg_.stage == 0) {
        torch::manual_seed(cfg_.seed);
        model_ = net::DLFModel(cfg_.model_for_lambda(cfg_.model));
        manifest_.model = model_->config();
        return;
    }
    require(!cfg_.init.empty(), ErrorKind::checkpoint_mismatch,
            "stage " + std::to_string(cfg_.stage) + " needs train.init pointing at a stage " +
                std::to_string(cfg_.stage - 1) + " checkpoint");
    require(fs::exists(cfg_.init), ErrorKind::checkpoint_mismatch, "prerequisite checkpoint not found: " + cfg_.init);
    auto prev = net::load_checkpoint(cfg_.init);
    require(prev.manifest.stage == cfg_.stage - 1, ErrorKind::checkpoint_mismatch,
            "stage ordering: stage " + std::to_string(cfg_.stage) + " must start from a stage " +
                std::to_string(cfg_.stage - 1) + " checkpoint, got stage " + std::to_string(prev.manifest.stage));
    auto mc = cfg_.model_for_lambda(prev.manifest.model);
    if (cfg_.stage == 2) {
        require(mc.variant == prev.manifest.model.variant, ErrorKind::checkpoint_mismatch,
                std::string("stage 2 variant ") + net::to_string(mc.variant) + " differs from the stage 1 checkpoint (" +
                    net::to_string(prev.manifest.model.variant) + ")");
        require(mc.hash() == prev.manifest.model.hash(), ErrorKind::checkpoint_mismatch,
                "stage 2 architecture differs from the stage 1 checkpoint (lambda index picks another detail codebook?)");
    }
    torch::manual_seed(cfg_.seed);
    model_ = net::DLFModel(mc);
    const auto untouched = copy_matching(model_, prev.model);
    if (cfg_.stage == 2)
        require(untouched.empty(), ErrorKind::checkpoint_mismatch, "stage 1 checkpoint lacks tensor " +
                                                                       (untouched.empty() ? "" : untouched.front()));
    if (cfg_.stage == 1 && mc.variant == net::Variant::vq_detail &&
        std::find(untouched.begin(), untouched.end(), "det_codebook") != untouched.end())
        init_detail_codebook();
    manifest_.model = model_->config();
}

void Trainer::maybe_resume() {
    if (!cfg_.resume || !fs::exists(cfg_.out)) return;
    auto ck = net::load_checkpoint(cfg_.out);
    const auto& m = ck.manifest;
    require(m.stage == cfg_.stage && m.lambda_index == cfg_.lambda_index &&
                m.model.hash() == model_->config().hash() && m.model.variant == model_->config().variant,
            ErrorKind::checkpoint_mismatch,
            "existing checkpoint " + cfg_.out + " belongs to another run; remove it or set train.resume = false");
    copy_matching(model_, ck.model);
    start_step_ = m.step;
    resumed_ = true;
}

// Cosine decay to a tenth of the base rate across each phase. A pure
// function of the step so resumed runs see the same rates.
double Trainer::phase_lr(std::int64_t step, std::int64_t total) const {
    std::int64_t begin = 0, end = total;
    if (cfg_.stage == 0) {
        if (step < cfg_.ae_steps) end = cfg_.ae_steps;
        else begin = cfg_.ae_steps;
    }
    const double t = end - begin > 1 ? static_cast<double>(step - begin) / static_cast<double>(end - begin - 1) : 0.0;
    return cfg_.stage_lr() * (0.1 + 0.45 * (1.0 + std::cos(std::numbers::pi * t)));
}

void Trainer::start_phase(const std::string& phase) {
    phase_ = phase;
    if (phase == "ae") set_trainable(model_, {ParamGroup::generator, ParamGroup::auxiliary});
    else if (phase == "tokenizer") set_trainable(model_, {ParamGroup::semantic, ParamGroup::adaptor});
    else if (phase == "align") set_trainable(model_, {ParamGroup::detail, ParamGroup::interaction, ParamGroup::adaptor});
    else
        set_trainable(model_, {ParamGroup::semantic, ParamGroup::detail, ParamGroup::interaction, ParamGroup::adaptor,
                               ParamGroup::generator});
    model_->interaction = phase != "tokenizer" && model_->config().uses_interaction();
    opt_ = std::make_unique<torch::optim::Adam>(model_->parameters(), torch::optim::AdamOptions(cfg_.stage_lr()));
    const auto sidecar = cfg_.out + ".optim";
    if (resumed_ && fs::exists(sidecar) && manifest_.extra.value("phase", "") == phase) torch::load(*opt_, sidecar);
    if (phase == "tokenizer" || phase == "align") cache_targets();
}

void Trainer::cache_targets() {
    if (targets_.defined()) return;
    torch::NoGradGuard g;
    std::vector<torch::Tensor> parts;
    for (std::int64_t i = 0; i < images_.size(0); i += 32)
        parts.push_back(model_->auxiliary(images_.narrow(0, i, std::min<std::int64_t>(32, images_.size(0) - i))));
    targets_ = torch::cat(parts, 0);
}

void Trainer::init_semantic_codebook() {
    torch::NoGradGuard g;
    std::mt19937_64 rng(mix(cfg_.seed, 0xC0DEB00C));
    std::vector<torch::Tensor> tokens;
    std::int64_t have = 0;
    const auto k = static_cast<std::int64_t>(model_->config().codebook_size);
    for (std::int64_t i = 0; i < images_.size(0) && have < 4 * k; i += 32) {
        auto ys = model_->encode(images_.narrow(0, i, std::min<std::int64_t>(32, images_.size(0) - i))).y_s;
        tokens.push_back(ys.reshape({-1, ys.size(-1)}));
        have += tokens.back().size(0);
    }
    auto rows = torch::cat(tokens, 0);
    auto pick = sample_rows(rows, k, rng);
    model_->sem_codebook.copy_(pick + torch::randn_like(pick) * 0.01 * rows.std());
}

void Trainer::init_detail_codebook() {
    torch::NoGradGuard g;
    std::mt19937_64 rng(mix(cfg_.seed, 0xDE7A11));
    const auto n = std::min<std::int64_t>(images_.size(0), 64);
    auto yd = model_->encode(images_.narrow(0, 0, n)).y_d;
    auto rows = yd.permute({0, 2, 3, 1}).reshape({-1, yd.size(1)});
    auto pick = sample_rows(rows, model_->det_codebook.size(0), rng);
    model_->det_codebook.copy_(pick + torch::randn_like(pick) * 0.01 * rows.std());
}

TraceRow Trainer::row(std::int64_t step, const std::string& phase, double lambda, const LossReport& r) const {
    TraceRow t;
    t.step = step;
    t.phase = phase;
    t.lambda = lambda;
    t.total = r.total_value();
    t.distortion = r.distortion;
    t.perceptual = r.perceptual;
    t.adversarial = r.adversarial;
    t.codebook = r.codebook;
    t.rate_bits = r.rate_bits;
    t.bpp = r.bpp;
    return t;
}

TraceRow Trainer::step_ae(std::int64_t step) {
    auto x = batch(step);
    LossParts p;
    p.distortion = (model_->synthesize(model_->auxiliary(x)) - x).pow(2).mean();
    auto r = combine(p, {}, step);
    opt_->zero_grad();
    r.total.backward();
    opt_->step();
    return row(step, "ae", 0.0, r);
}

TraceRow Trainer::step_tokenizer(std::int64_t step) {
    std::vector<std::int64_t> idx;
    auto x = batch(step, &idx);
    auto target = targets_.index_select(0, torch::tensor(idx, torch::kInt64));
    auto enc = model_->encode(x);
    auto vq = quant::vq_assign(enc.y_s, model_->sem_codebook);
    auto ys_hat = quant::straight_through(enc.y_s, vq.quantized);
    auto dec = model_->dual_decode(ys_hat, torch::zeros_like(enc.y_d), model_->config().active_tokens());
    LossParts p;
    p.distortion = (model_->fuse(dec.h_d, dec.h_s) - target).pow(2).mean();
    p.codebook = quant::codebook_loss(enc.y_s, vq.quantized, cfg_.beta);
    auto r = combine(p, {}, step);
    opt_->zero_grad();
    r.total.backward();
    opt_->step();

    // Dead-code bookkeeping, one "epoch" per pass over the training set.
    if (!dead_) dead_ = std::make_unique<quant::DeadCodeTracker>(model_->config().codebook_size);
    dead_->observe(vq.indices);
    const auto epoch = std::max<std::int64_t>(1, images_.size(0) / cfg_.batch);
    if ((step - cfg_.ae_steps + 1) % epoch == 0) {
        torch::NoGradGuard g;
        std::mt19937_64 rng(mix(cfg_.seed, static_cast<std::uint64_t>(step) ^ 0xDEAD));
        auto rows = enc.y_s.detach().reshape({-1, enc.y_s.size(-1)});
        dead_->end_epoch(model_->sem_codebook, rows, rng);
    }
    return row(step, "tokenizer", 0.0, r);
}

TraceRow Trainer::step_align(std::int64_t step) {
    std::vector<std::int64_t> idx;
    auto x = batch(step, &idx);
    auto target = targets_.index_select(0, torch::tensor(idx, torch::kInt64));
    auto enc = model_->encode(x);
    auto vq = quant::vq_assign(enc.y_s, model_->sem_codebook);
    auto ys_hat = quant::straight_through(enc.y_s, vq.quantized.detach());
    auto det = quantize_detail_train(model_, enc.y_d, cfg_.beta);
    auto dec = model_->dual_decode(ys_hat, det.values, model_->config().active_tokens());
    auto h_hat = model_->fuse(dec.h_d, dec.h_s);
    const double pixels = static_cast<double>(x.size(0) * x.size(2) * x.size(3));
    const double lambda = cfg_.schedule.at(step);
    LossParts p;
    p.distortion = (h_hat - target).pow(2).mean();
    p.codebook = det.codebook;
    p.bpp = det.bits / pixels;
    p.rate_bits = det.bits.item<double>();
    auto r = combine(p, {0.0, 0.0, lambda * cfg_.rate_scale}, step);
    opt_->zero_grad();
    r.total.backward();
    opt_->step();
    return row(step, "align", lambda, r);
}

TraceRow Trainer::step_finetune(std::int64_t step) {
    auto x = batch(step);
    auto enc = model_->encode(x);
    auto vq = quant::vq_assign(enc.y_s, model_->sem_codebook);
    auto ys_hat = quant::straight_through(enc.y_s, vq.quantized);
    auto det = quantize_detail_train(model_, enc.y_d, cfg_.beta);
    auto dec = model_->dual_decode(ys_hat, det.values, model_->config().active_tokens());
    auto x_hat = model_->synthesize(model_->fuse(dec.h_d, dec.h_s));
    const double pixels = static_cast<double>(x.size(0) * x.size(2) * x.size(3));
    const double lambda = cfg_.stage2_lambda();
    Stage2Weights w{cfg_.perceptual_weight, cfg_.lambda_adv, cfg_.beta, lambda, cfg_.rate_scale};
    auto r = stage2_loss(x, x_hat, enc.y_s, vq.quantized, det.bits / pixels, w, pyramid_, disc_,
                         det.bits.item<double>(), det.codebook);
    opt_->zero_grad();
    if (disc_) disc_->zero_grad();
    r.total.backward();
    opt_->step();
    if (disc_) {
        disc_opt_->zero_grad();
        discriminator_loss(disc_->forward(x), disc_->forward(x_hat.detach().clamp(0.0, 1.0))).backward();
        disc_opt_->step();
    }
    return row(step, "finetune", lambda, r);
}

void Trainer::save(std::int64_t steps_done, bool final) {
    manifest_.stage = cfg_.stage;
    manifest_.lambda_index = cfg_.lambda_index;
    manifest_.lambda = cfg_.stage == 2 ? cfg_.stage2_lambda() : cfg_.stage == 1 ? cfg_.schedule.at(std::max<std::int64_t>(0, steps_done - 1)) : 0.0;
    manifest_.step = steps_done;
    manifest_.extra["phase"] = phase_;
    manifest_.extra["finished"] = final;
    manifest_.extra["config"] = cfg_.to_keys().dump();
    if (cfg_.out.find('/') != std::string::npos) fs::create_directories(fs::path(cfg_.out).parent_path());
    net::save_checkpoint(cfg_.out, model_, manifest_);
    save_torch_atomic(cfg_.out + ".optim", [&](const std::string& p) { torch::save(*opt_, p); });
    if (disc_) {
        save_torch_atomic(cfg_.out + ".disc", [&](const std::string& p) { torch::save(disc_, p); });
        save_torch_atomic(cfg_.out + ".disc.optim", [&](const std::string& p) { torch::save(*disc_opt_, p); });
    }
}

nlohmann::json Trainer::summarize() {
    torch::NoGradGuard g;
    model_->eval();
    nlohmann::json s = nlohmann::json::object();
    const auto& held = data_.val.empty() ? data_.test : data_.val;
    if (held.empty()) return s;
    if (cfg_.stage == 0) {
        double psnr = 0.0;
        for (const auto& img : held) {
            auto plane = pad_to_multiple(img, model_->config().window_pixels());
            auto rec = net::generate(model_, model_->auxiliary(net::to_tensor(plane.pixels)), img.height, img.width);
            psnr += eval::psnr(img, rec);
        }
        s["ae_val_psnr"] = psnr / static_cast<double>(held.size());
    }
    double bpp = 0.0, lmse = 0.0, psnr = 0.0;
    for (const auto& img : held) {
        const auto r = eval::evaluate_image(model_, img, cfg_.lambda_index);
        bpp += r.bpp;
        lmse += r.latent_mse;
        psnr += r.psnr_db;
    }
    const auto n = static_cast<double>(held.size());
    s["val_bpp"] = bpp / n;
    s["val_latent_mse"] = lmse / n;
    s["val_psnr"] = psnr / n;
    model_->train();
    return s;
}

TrainResult Trainer::run() {
    cfg_.validate();
    require(!data_.train.empty(), ErrorKind::invalid_input, "training set is empty");
    build_model();
    maybe_resume();
    images_ = stack_images(data_.train);
    require(images_.size(2) % model_->config().window_pixels() == 0 && images_.size(3) % model_->config().window_pixels() == 0,
            ErrorKind::config, "training crops must tile into whole windows");
    if (cfg_.stage == 2) {
        if (cfg_.perceptual_weight > 0.0) pyramid_ = PerceptualPyramid();
        if (cfg_.adversarial) {
            torch::manual_seed(mix(cfg_.seed, 0xD15C));
            disc_ = PatchDiscriminator();
            disc_opt_ = std::make_unique<torch::optim::Adam>(disc_->parameters(),
                                                             torch::optim::AdamOptions(cfg_.discriminator_lr));
            if (resumed_ && fs::exists(cfg_.out + ".disc")) {
                torch::load(disc_, cfg_.out + ".disc");
                torch::load(*disc_opt_, cfg_.out + ".disc.optim");
            }
        }
    }
    if (resumed_) manifest_.extra = net::read_manifest(cfg_.out).extra;

    const auto total = cfg_.total_steps();
    TrainResult result;
    result.checkpoint = cfg_.out;
    result.first_step = start_step_;
    if (resumed_ && start_step_ >= total && manifest_.extra.value("finished", false)) {
        result.steps_done = start_step_;
        result.finished = true;
        result.summary = manifest_.extra.value("summary", nlohmann::json::object());
        return result;
    }
    Trace trace(cfg_.trace_path(), start_step_);
    model_->train();

    std::int64_t step = start_step_;
    bool stopped = false;
    while (step < total) {
        const std::string phase = phase_name(cfg_.stage, step, cfg_.ae_steps);
        if (phase != phase_) {
            if (phase == "tokenizer" && !(resumed_ && manifest_.extra.value("phase", "") == "tokenizer"))
                init_semantic_codebook();
            start_phase(phase);
        }
        for (auto& g : opt_->param_groups())
            static_cast<torch::optim::AdamOptions&>(g.options()).lr(phase_lr(step, total));
        TraceRow r;
        if (phase == "ae") r = step_ae(step);
        else if (phase == "tokenizer") r = step_tokenizer(step);
        else if (phase == "align") r = step_align(step);
        else r = step_finetune(step);
        require(std::isfinite(r.total), ErrorKind::invalid_input, "loss diverged at step " + std::to_string(step));
        trace.add(r);
        ++step;
        const bool keep_going = !hooks_.on_step || hooks_.on_step(r);
        if (!keep_going || (cfg_.save_every > 0 && step % cfg_.save_every == 0 && step < total)) save(step, false);
        if (!keep_going) {
            stopped = true;
            break;
        }
    }
    if (phase_.empty()) start_phase(phase_name(cfg_.stage, std::max<std::int64_t>(0, total - 1), cfg_.ae_steps));
    result.steps_done = step;
    result.finished = !stopped;
    if (!stopped) {
        result.summary = summarize();
        manifest_.extra["summary"] = result.summary;
        save(step, true);
    }
    return result;
}

}  // namespace

std::string format_trace_row(const TraceRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%lld,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", static_cast<long long>(r.step),
                  r.phase.c_str(), r.lambda, r.total, r.distortion, r.perceptual, r.adversarial, r.codebook,
                  r.rate_bits, r.bpp);
    return buf;
}

std::vector<TraceRow> read_trace(const fs::path& path) {
    const auto bytes = io::read_file(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    std::vector<TraceRow> out;
    require(static_cast<bool>(std::getline(in, line)) && line == kTraceHeader, ErrorKind::format,
            "not a loss trace: " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string item;
        while (std::getline(ls, item, ',')) f.push_back(item);
        require(f.size() == 10, ErrorKind::format, "malformed trace row: " + line);
        TraceRow r;
        try {
            r.step = std::stoll(f[0]);
            r.phase = f[1];
            r.lambda = std::stod(f[2]);
            r.total = std::stod(f[3]);
            r.distortion = std::stod(f[4]);
            r.perceptual = std::stod(f[5]);
            r.adversarial = std::stod(f[6]);
            r.codebook = std::stod(f[7]);
            r.rate_bits = std::stod(f[8]);
            r.bpp = std::stod(f[9]);
        } catch (const std::exception&) {
            fail(ErrorKind::format, "malformed trace row: " + line);
        }
        out.push_back(r);
    }
    return out;
}

std::vector<std::string> copy_matching(net::DLFModel& dst, net::DLFModel& src) {
    torch::NoGradGuard g;
    std::map<std::string, torch::Tensor> from;
    for (auto& p : src->named_parameters()) from[p.key()] = p.value();
    for (auto& b : src->named_buffers()) from[b.key()] = b.value();
    std::vector<std::string> untouched;
    auto visit = [&](const std::string& name, torch::Tensor& t) {
        auto it = from.find(name);
        if (it != from.end() && it->second.sizes() == t.sizes()) t.copy_(it->second);
        else untouched.push_back(name);
    };
    for (auto& p : dst->named_parameters()) visit(p.key(), p.value());
    for (auto& b : dst->named_buffers()) visit(b.key(), b.value());
    return untouched;
}

torch::Tensor stack_images(const std::vector<Image>& images) {
    require(!images.empty(), ErrorKind::invalid_input, "no images to stack");
    std::vector<torch::Tensor> ts;
    for (const auto& img : images) {
        require(img.same_shape(images.front()), ErrorKind::shape, "training images must share one crop size");
        ts.push_back(net::to_tensor(img));
    }
    return torch::cat(ts, 0);
}

TrainResult run_training(const TrainConfig& cfg, const io::Dataset& data, const TrainHooks& hooks) {
    Trainer t(cfg, data, hooks);
    return t.run();
}

TrainResult run_training(const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    auto spec = cfg.data;
    const auto data = io::load_dataset(spec);
    require(!data.train.empty(), ErrorKind::invalid_input, "dataset " + spec.root + " has no training images");
    return run_training(cfg, data, hooks);
}

}  // namespace dlf::train
