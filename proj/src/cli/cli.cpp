#include "dlf/cli/cli.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "dlf/bits/container.hpp"
#include "dlf/codec/codec.hpp"
#include "dlf/eval/runner.hpp"
#include "dlf/io/config.hpp"
#include "dlf/io/dataset.hpp"
#include "dlf/net/checkpoint.hpp"
#include "dlf/train/trainer.hpp"

namespace dlf::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind, Source source) {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::invalid_input:
        case ErrorKind::io:
        case ErrorKind::shape: return kExitInput;
        case ErrorKind::checkpoint_mismatch:
        case ErrorKind::version:
        case ErrorKind::causality: return kExitMismatch;
        case ErrorKind::length:
            return source == Source::container ? kExitTruncated : source == Source::checkpoint ? kExitMismatch : kExitInput;
        case ErrorKind::format: return source == Source::input ? kExitInput : kExitMismatch;
    }
    return 1;
}

namespace {

struct Failure {
    Error error;
    Source source;
};

// Runs `f`, tagging any dlf::Error with `source`.
template <typename F>
auto tagged(Source source, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Failure{e, source};
    }
}

void set_workers(int workers) {
    if (workers > 0) torch::set_num_threads(workers);
}

net::Checkpoint load_model(const std::string& path, const std::string& variant) {
    auto ck = tagged(Source::checkpoint, [&] { return net::load_checkpoint(path); });
    if (!variant.empty()) {
        const auto want = tagged(Source::input, [&] { return net::parse_variant(variant); });
        if (want != ck.manifest.model.variant)
            throw Failure{Error(ErrorKind::checkpoint_mismatch, path + " is a " +
                                                                    net::to_string(ck.manifest.model.variant) +
                                                                    " checkpoint, --variant asked for " + variant),
                          Source::checkpoint};
    }
    return ck;
}

// key=value overrides from --set.
void apply_sets(io::KeyValueConfig& cfg, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) fail(ErrorKind::config, "--set expects key=value, got '" + s + "'");
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t"), e = v.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
}

struct Options {
    std::string input, config, checkpoint, out, variant, data, label, anchor;
    std::vector<std::string> checkpoints, sets;
    long long seed = -1;
    int workers = 0;
};

int cmd_encode(const Options& o, std::ostream& out) {
    set_workers(o.workers);
    const auto image = tagged(Source::input, [&] { return io::read_image(o.input); });
    auto ck = load_model(o.checkpoint, o.variant);
    const auto bytes = tagged(Source::input, [&] {
        return codec::encode_image(ck.model, image, ck.manifest.lambda_index);
    });
    tagged(Source::input, [&] { io::write_file_atomic(o.out, std::vector<unsigned char>(bytes.begin(), bytes.end())); });
    const auto c = bits::read_container(bytes);
    out << "wrote " << o.out << ": " << bytes.size() << " bytes (header " << bits::kContainerHeaderBytes
        << ", semantic " << c.semantic_payload.size() << ", detail " << c.detail_payload.size() << "), "
        << image.width << "x" << image.height << ", bpp " << codec::compute_bpp(c) << "\n";
    return kExitOk;
}

int cmd_decode(const Options& o, std::ostream& out) {
    set_workers(o.workers);
    const auto bytes = tagged(Source::input, [&] { return io::read_file(o.input); });
    auto ck = load_model(o.checkpoint, o.variant);
    const auto image = tagged(Source::container, [&] {
        return codec::decode_image(ck.model, std::vector<std::uint8_t>(bytes.begin(), bytes.end()),
                                   ck.manifest.lambda_index);
    });
    tagged(Source::input, [&] { io::write_image(o.out, image); });
    out << "wrote " << o.out << ": " << image.width << "x" << image.height << "\n";
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    set_workers(o.workers);
    auto cfg = tagged(Source::input, [&] {
        auto kv = io::KeyValueConfig::load(o.config);
        apply_sets(kv, o.sets);
        if (o.seed >= 0) kv.set("train.seed", std::to_string(o.seed));
        if (!o.variant.empty()) kv.set("model.variant", o.variant);
        if (!o.out.empty()) kv.set("train.out", o.out);
        if (!o.checkpoint.empty()) kv.set("train.init", o.checkpoint);
        auto c = train::TrainConfig::from_keys(kv);
        c.validate();
        return c;
    });
    out << "# effective configuration\n" << cfg.to_keys().dump() << std::flush;
    train::TrainHooks hooks;
    hooks.on_step = [&](const train::TraceRow& r) {
        if ((r.step + 1) % 50 == 0)
            out << "step " << r.step + 1 << " [" << r.phase << "] total " << r.total << " distortion " << r.distortion
                << " bpp " << r.bpp << std::endl;
        return true;
    };
    const auto result = tagged(Source::checkpoint, [&] { return train::run_training(cfg, hooks); });
    out << "wrote " << result.checkpoint.string() << " after " << result.steps_done << " steps\n"
        << "trace " << cfg.trace_path() << "\n"
        << "summary " << result.summary.dump() << "\n";
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    set_workers(1);
    io::KeyValueConfig kv;
    std::vector<std::string> checkpoints = o.checkpoints;
    std::string label = o.label, anchor = o.anchor;
    io::DatasetSpec spec;
    spec.split = {0.0, 0.0, 1.0};
    tagged(Source::input, [&] {
        if (!o.config.empty()) kv = io::KeyValueConfig::load(o.config);
        apply_sets(kv, o.sets);
        kv.require_known({"data.root", "data.crop", "data.split", "data.seed", "data.max_images", "eval.label",
                          "eval.anchor", "eval.checkpoints", "eval.variant"});
        spec.root = o.data.empty() ? kv.get_string("data.root", "") : o.data;
        spec.crop = static_cast<int>(kv.get_int("data.crop", spec.crop));
        const auto split = kv.get_doubles("data.split", {spec.split.begin(), spec.split.end()});
        require(split.size() == 3, ErrorKind::config, "data.split needs three ratios");
        std::copy(split.begin(), split.end(), spec.split.begin());
        spec.seed = static_cast<std::uint64_t>(o.seed >= 0 ? o.seed : kv.get_int("data.seed", 0));
        spec.max_images = static_cast<int>(kv.get_int("data.max_images", 0));
        require(!spec.root.empty(), ErrorKind::config, "no dataset: pass --data or set data.root");
        if (checkpoints.empty()) {
            std::istringstream list(kv.get_string("eval.checkpoints", ""));
            for (std::string c; std::getline(list, c, ',');)
                if (!c.empty()) checkpoints.push_back(c);
        }
        require(!checkpoints.empty(), ErrorKind::config, "no checkpoints: pass --checkpoint");
        if (anchor.empty()) anchor = kv.get_string("eval.anchor", "full");
    });
    const auto variant_name = !o.variant.empty() ? o.variant : kv.get_string("eval.variant", "full");
    const auto variant = tagged(Source::input, [&] { return net::parse_variant(variant_name); });
    if (label.empty()) label = kv.get_string("eval.label", variant_name);
    const auto data = tagged(Source::input, [&] { return io::load_dataset(spec); });
    std::vector<Image> images;
    for (const auto* split : {&data.train, &data.val, &data.test}) images.insert(images.end(), split->begin(), split->end());
    if (images.empty()) throw Failure{Error(ErrorKind::invalid_input, "dataset " + spec.root + " is empty"), Source::input};

    std::vector<fs::path> paths(checkpoints.begin(), checkpoints.end());
    const auto run = tagged(Source::checkpoint, [&] {
        return eval::run_eval(paths, images, {}, label, variant, std::max(1, o.workers));
    });
    const auto curves = tagged(Source::input, [&] { return eval::write_eval_outputs(o.out, run, anchor); });
    out << "evaluated " << images.size() << " images x " << paths.size() << " checkpoints as '" << label << "'\n";
    for (const auto& p : run.curve.points)
        out << "  bpp " << p.bpp << " psnr " << p.metrics.at("psnr_db") << " ms_ssim " << p.metrics.at("ms_ssim")
            << " latent_mse " << p.metrics.at("latent_mse") << "\n";
    out << "wrote " << (fs::path(o.out) / "rd.csv").string() << ", " << (fs::path(o.out) / "report.md").string()
        << " (" << curves.size() << " curves)\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"dlf: dual-branch extreme image codec"};
    app.require_subcommand(1);
    Options o;

    auto* enc = app.add_subcommand("encode", "Compress an image into a container");
    enc->add_option("input", o.input, "PNG or PPM image")->required();
    enc->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
    enc->add_option("--out", o.out, "Output container")->required();
    enc->add_option("--variant", o.variant, "Expected model variant");
    enc->add_option("--workers", o.workers, "Intra-op threads");

    auto* dec = app.add_subcommand("decode", "Reconstruct an image from a container");
    dec->add_option("input", o.input, "Container")->required();
    dec->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
    dec->add_option("--out", o.out, "Output image (.png or .ppm)")->required();
    dec->add_option("--variant", o.variant, "Expected model variant");
    dec->add_option("--workers", o.workers, "Intra-op threads");

    auto* tr = app.add_subcommand("train", "Run one training stage");
    tr->add_option("--config", o.config, "Training config (key = value)")->required();
    tr->add_option("--checkpoint", o.checkpoint, "Prerequisite checkpoint (overrides train.init)");
    tr->add_option("--out", o.out, "Checkpoint to write (overrides train.out)");
    tr->add_option("--variant", o.variant, "Model variant (overrides model.variant)");
    tr->add_option("--seed", o.seed, "Seed (overrides train.seed)");
    tr->add_option("--workers", o.workers, "Intra-op threads");
    tr->add_option("--set", o.sets, "Extra key=value overrides");

    auto* ev = app.add_subcommand("eval", "Rate-distortion evaluation of a checkpoint set");
    ev->add_option("--config", o.config, "Eval config (data.* and eval.* keys)");
    ev->add_option("--data", o.data, "Image directory or toy:<count>");
    ev->add_option("--checkpoint", o.checkpoints, "Checkpoints, one per lambda");
    ev->add_option("--out", o.out, "Output directory")->required();
    ev->add_option("--variant", o.variant, "Variant of the checkpoints");
    ev->add_option("--label", o.label, "Curve label (defaults to the variant)");
    ev->add_option("--anchor", o.anchor, "Anchor curve for BD-rate");
    ev->add_option("--seed", o.seed, "Dataset seed");
    ev->add_option("--workers", o.workers, "Worker threads");
    ev->add_option("--set", o.sets, "Extra key=value overrides");

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*enc) return cmd_encode(o, out);
        if (*dec) return cmd_decode(o, out);
        if (*tr) return cmd_train(o, out);
        return cmd_eval(o, out);
    } catch (const Failure& f) {
        err << "dlf: " << f.error.what() << "\n";
        return exit_code(f.error.kind(), f.source);
    } catch (const Error& e) {
        err << "dlf: " << e.what() << "\n";
        return exit_code(e.kind(), Source::input);
    } catch (const std::exception& e) {
        err << "dlf: internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dlf::cli
