#include "dlf/eval/runner.hpp"

#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

#include "dlf/bits/container.hpp"
#include "dlf/codec/codec.hpp"
#include "dlf/error.hpp"
#include "dlf/eval/metrics.hpp"
#include "dlf/eval/report.hpp"

namespace dlf::eval {

namespace fs = std::filesystem;

ImageResult evaluate_image(net::DLFModel& model, const Image& image, int lambda_index, bool check_transparency) {
    torch::NoGradGuard guard;
    ImageResult r;
    r.lambda_index = lambda_index;
    const auto q = codec::quantize(model, image);
    const auto container = codec::serialize(model, q, lambda_index);
    const auto bytes = bits::write_container(container);
    r.bytes = bytes.size();
    r.semantic_bytes = container.semantic_payload.size();
    r.detail_bytes = container.detail_payload.size();
    r.bpp = codec::compute_bpp(container);

    const auto decoded = codec::decode_image(model, bytes, lambda_index);
    r.psnr_db = psnr(image, decoded);
    r.ms_ssim = ms_ssim(image, decoded);
    if (check_transparency) r.transparent = decoded.data == codec::reconstruct(model, q).data;

    const auto plane = pad_to_multiple(image, model->config().window_pixels());
    const auto target = model->auxiliary(net::to_tensor(plane.pixels));
    const auto h_hat = codec::reconstruct_latent(model, codec::deserialize(model, container, lambda_index));
    r.latent_mse = (h_hat - target).pow(2).mean().item<double>();
    return r;
}

EvalRun run_eval(const std::vector<fs::path>& checkpoints, const std::vector<Image>& images,
                 const std::vector<std::string>& names, const std::string& label, net::Variant variant, int workers) {
    require(!images.empty(), ErrorKind::invalid_input, "evaluation set is empty");
    require(!checkpoints.empty(), ErrorKind::invalid_input, "no checkpoints to evaluate");
    require(names.empty() || names.size() == images.size(), ErrorKind::invalid_input, "one name per image expected");
    workers = std::max(1, workers);
    EvalRun run;
    run.curve.label = label;
    for (const auto& path : checkpoints) {
        auto ck = net::load_checkpoint(path);
        require(ck.manifest.model.variant == variant, ErrorKind::checkpoint_mismatch,
                path.string() + " is a " + net::to_string(ck.manifest.model.variant) + " checkpoint, expected " +
                    net::to_string(variant));
        std::vector<ImageResult> results(images.size());
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr error;
        auto work = [&] {
            for (std::size_t i = next++; i < images.size(); i = next++) {
                try {
                    results[i] = evaluate_image(ck.model, images[i], ck.manifest.lambda_index);
                    results[i].image = names.empty() ? std::to_string(i) : names[i];
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!error) error = std::current_exception();
                }
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        if (error) std::rethrow_exception(error);

        RDPoint p;
        for (const auto& r : results) {
            p.bpp += r.bpp;
            p.metrics["psnr_db"] += r.psnr_db;
            p.metrics["ms_ssim"] += r.ms_ssim;
            p.metrics["latent_mse"] += r.latent_mse;
        }
        const auto n = static_cast<double>(results.size());
        p.bpp /= n;
        for (auto& [k, v] : p.metrics) v /= n;
        run.curve.points.push_back(p);
        run.images.insert(run.images.end(), results.begin(), results.end());
    }
    run.curve.sort_by_bpp();
    return run;
}

std::string per_image_csv(const std::vector<ImageResult>& rows) {
    std::string out = "image,lambda_index,bytes,semantic_bytes,detail_bytes,bpp,psnr_db,ms_ssim,latent_mse\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%zu,%zu,%zu,%.9g,%.9g,%.9g,%.9g\n", r.image.c_str(), r.lambda_index,
                      r.bytes, r.semantic_bytes, r.detail_bytes, r.bpp, r.psnr_db, r.ms_ssim, r.latent_mse);
        out += buf;
    }
    return out;
}

std::string eval_report(const std::vector<RDCurve>& curves, const std::string& anchor) {
    std::string out = "# Rate-distortion report\n\n";
    out += "Distortion is measured with PSNR, MS-SSIM and latent MSE (fused latent against the auxiliary "
           "encoder's target). Perceptual metrics that need pretrained networks are not computed.\n\n";
    out += "## Curves\n\n| label | bpp | psnr_db | ms_ssim | latent_mse |\n|---|---|---|---|---|\n";
    char buf[256];
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            auto get = [&](const char* k) {
                auto it = p.metrics.find(k);
                return it == p.metrics.end() ? 0.0 : it->second;
            };
            std::snprintf(buf, sizeof buf, "| %s | %.6f | %.3f | %.5f | %.6f |\n", c.label.c_str(), p.bpp,
                          get("psnr_db"), get("ms_ssim"), get("latent_mse"));
            out += buf;
        }
    const RDCurve* a = nullptr;
    for (const auto& c : curves)
        if (c.label == anchor) a = &c;
    out += "\n## BD-rate against " + anchor + "\n\n";
    if (!a) {
        out += "Anchor curve not evaluated yet.\n";
        return out;
    }
    out += "Negative values mean fewer bits than the anchor at equal quality.\n\n";
    out += bd_rate_table(*a, curves, kReportMetrics);
    return out;
}

std::vector<RDCurve> write_eval_outputs(const fs::path& dir, const EvalRun& run, const std::string& anchor) {
    fs::create_directories(dir);
    std::vector<RDCurve> curves;
    const auto csv = dir / "rd.csv";
    if (fs::exists(csv))
        for (auto& c : read_rd_csv(csv))
            if (c.label != run.curve.label) curves.push_back(c);
    curves.push_back(run.curve);
    write_rd_csv(csv, curves);
    const auto rows = per_image_csv(run.images);
    io::write_file_atomic(dir / ("per_image_" + run.curve.label + ".csv"),
                          std::vector<unsigned char>(rows.begin(), rows.end()));
    const auto report = eval_report(curves, anchor);
    io::write_file_atomic(dir / "report.md", std::vector<unsigned char>(report.begin(), report.end()));
    return curves;
}

}  // namespace dlf::eval
