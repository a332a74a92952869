#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dlf/eval/bd_rate.hpp"
#include "dlf/io/image.hpp"
#include "dlf/net/checkpoint.hpp"

namespace dlf::eval {

struct ImageResult {
    std::string image;  // name or index
    int lambda_index = 0;
    double bpp = 0.0;
    std::size_t bytes = 0, semantic_bytes = 0, detail_bytes = 0;
    double psnr_db = 0.0;
    double ms_ssim = 0.0;
    double latent_mse = 0.0;  // fused latent vs the auxiliary encoder's target
    bool transparent = true;  // decode(encode(x)) equals the in-memory pass
};

// Encodes through the real container, decodes, and measures. With
// check_transparency the decoded image is also compared to the in-memory
// quantized reconstruction.
ImageResult evaluate_image(net::DLFModel& model, const Image& image, int lambda_index,
                           bool check_transparency = false);

struct EvalRun {
    RDCurve curve;                     // one point per checkpoint (mean over images)
    std::vector<ImageResult> images;   // per (image, checkpoint)
};

// Evaluates each checkpoint on every image with a bounded pool of
// `workers` threads sharing the read-only model. Every checkpoint must have
// the expected variant, else checkpoint_mismatch.
EvalRun run_eval(const std::vector<std::filesystem::path>& checkpoints, const std::vector<Image>& images,
                 const std::vector<std::string>& names, const std::string& label, net::Variant variant,
                 int workers = 1);

// Writes <dir>/rd.csv (merged with curves already there, same label
// replaced), <dir>/per_image_<label>.csv and <dir>/report.md with the
// BD-rate table of every curve against `anchor`. Returns the curves written.
std::vector<RDCurve> write_eval_outputs(const std::filesystem::path& dir, const EvalRun& run,
                                        const std::string& anchor = "full");

std::string per_image_csv(const std::vector<ImageResult>& rows);
std::string eval_report(const std::vector<RDCurve>& curves, const std::string& anchor);

inline const std::vector<std::string> kReportMetrics = {"psnr_db", "ms_ssim", "latent_mse"};

}  // namespace dlf::eval
