#pragma once

#include <array>

#include "dlf/io/image.hpp"

namespace dlf::eval {

// Reported for identical images instead of +inf.
inline constexpr double kPsnrCapDb = 100.0;

// Peak 1.0; 10 log10(1 / MSE) capped at kPsnrCapDb.
double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Number of dyadic scales usable for an image whose shorter side is
// `min_side`: the coarsest scale must still fit one 11x11 window. Scales
// shrink by ceil(n / 2), so 161 is the smallest side giving all five.
int ms_ssim_scales(int min_side);

// Multi-scale SSIM with Gaussian 11x11 (sigma 1.5) windows over the valid
// region, K1 = 0.01, K2 = 0.03, data range 1. Negative contrast-structure
// terms are clamped to zero before exponentiation. Per-channel scores are
// averaged. With fewer than five scales the first M weights are
// renormalized to sum to one; allow_fallback = false turns that case into an
// error instead.
double ms_ssim(const Image& a, const Image& b, bool allow_fallback = true);

}  // namespace dlf::eval
