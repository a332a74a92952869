#include "dlf/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dlf/error.hpp"

namespace dlf::eval {

double mse(const Image& a, const Image& b) {
    require(a.same_shape(b), ErrorKind::shape, "metric inputs differ in shape");
    require(!a.empty(), ErrorKind::invalid_input, "empty image");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b) {
    const double m = mse(a, b);
    if (m <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / m));
}

int ms_ssim_scales(int min_side) {
    int scales = 0;
    for (int side = min_side; side >= kSsimWindow && scales < 5; side = (side + 1) / 2) ++scales;
    return scales;
}

namespace {

using Plane = std::vector<double>;

struct PlaneView {
    int h, w;
    Plane v;
};

std::array<double, kSsimWindow> gaussian_taps() {
    std::array<double, kSsimWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += g[i];
    }
    for (double& t : g) t /= sum;
    return g;
}

// Separable valid-mode Gaussian filter.
PlaneView blur(const PlaneView& in) {
    static const auto taps = gaussian_taps();
    const int oh = in.h - kSsimWindow + 1, ow = in.w - kSsimWindow + 1;
    Plane rows(static_cast<std::size_t>(in.h) * ow, 0.0);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * in.v[static_cast<std::size_t>(y) * in.w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    PlaneView out{oh, ow, Plane(static_cast<std::size_t>(oh) * ow, 0.0)};
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out.v[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

PlaneView product(const PlaneView& a, const PlaneView& b) {
    PlaneView out{a.h, a.w, Plane(a.v.size())};
    for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

// 2x2 mean with ceil output size; an odd trailing row/column averages the
// samples that exist.
PlaneView downsample(const PlaneView& in) {
    const int oh = (in.h + 1) / 2, ow = (in.w + 1) / 2;
    PlaneView out{oh, ow, Plane(static_cast<std::size_t>(oh) * ow, 0.0)};
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            int n = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int yy = 2 * y + dy, xx = 2 * x + dx;
                    if (yy < in.h && xx < in.w) {
                        acc += in.v[static_cast<std::size_t>(yy) * in.w + xx];
                        ++n;
                    }
                }
            out.v[static_cast<std::size_t>(y) * ow + x] = acc / n;
        }
    return out;
}

// Mean SSIM and mean contrast-structure over the valid region.
std::pair<double, double> ssim_terms(const PlaneView& x, const PlaneView& y) {
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const auto mx = blur(x), my = blur(y);
    const auto sxx = blur(product(x, x)), syy = blur(product(y, y)), sxy = blur(product(x, y));
    double ssim = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < mx.v.size(); ++i) {
        const double vx = sxx.v[i] - mx.v[i] * mx.v[i];
        const double vy = syy.v[i] - my.v[i] * my.v[i];
        const double cov = sxy.v[i] - mx.v[i] * my.v[i];
        const double cs_i = (2.0 * cov + c2) / (vx + vy + c2);
        const double l_i = (2.0 * mx.v[i] * my.v[i] + c1) / (mx.v[i] * mx.v[i] + my.v[i] * my.v[i] + c1);
        ssim += l_i * cs_i;
        cs += cs_i;
    }
    const auto n = static_cast<double>(mx.v.size());
    return {ssim / n, cs / n};
}

}  // namespace

double ms_ssim(const Image& a, const Image& b, bool allow_fallback) {
    require(a.same_shape(b), ErrorKind::shape, "metric inputs differ in shape");
    const int scales = ms_ssim_scales(std::min(a.height, a.width));
    require(scales >= 1, ErrorKind::invalid_input, "image smaller than the 11x11 SSIM window");
    require(scales == 5 || allow_fallback, ErrorKind::invalid_input,
            "MS-SSIM needs min side >= 161 for five scales");
    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) wsum += kMsSsimWeights[s];

    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        PlaneView x{a.height, a.width, Plane(static_cast<std::size_t>(a.height) * a.width)};
        PlaneView y = x;
        for (int yy = 0; yy < a.height; ++yy)
            for (int xx = 0; xx < a.width; ++xx) {
                x.v[static_cast<std::size_t>(yy) * a.width + xx] = a.at(c, yy, xx);
                y.v[static_cast<std::size_t>(yy) * a.width + xx] = b.at(c, yy, xx);
            }
        double score = 1.0;
        for (int s = 0; s < scales; ++s) {
            const auto [ssim, cs] = ssim_terms(x, y);
            const double w = kMsSsimWeights[s] / wsum;
            const double term = s == scales - 1 ? ssim : cs;
            score *= std::pow(std::max(term, 0.0), w);
            if (s + 1 < scales) {
                x = downsample(x);
                y = downsample(y);
            }
        }
        total += score;
    }
    return total / a.channels;
}

}  // namespace dlf::eval
