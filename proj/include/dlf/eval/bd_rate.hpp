#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace dlf::eval {

struct RDPoint {
    double bpp = 0.0;
    std::map<std::string, double> metrics;  // psnr_db, ms_ssim, latent_mse, ...
};

struct RDCurve {
    std::string label;
    std::vector<RDPoint> points;  // sorted by bpp

    void sort_by_bpp();
    std::vector<double> rates() const;
    std::vector<double> metric(const std::string& name) const;
};

enum class Orientation { higher_is_better, lower_is_better };

Orientation orientation_of(const std::string& metric);

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes with
// the three-point end conditions), integrated exactly per segment.
class Pchip {
public:
    Pchip(std::vector<double> x, std::vector<double> y);

    double operator()(double at) const;
    double integral(double lo, double hi) const;

    const std::vector<double>& knots() const { return x_; }

private:
    double segment_integral(std::size_t k, double lo, double hi) const;

    std::vector<double> x_, y_, d_;
};

// Average bitrate difference (percent) of `test` relative to `anchor` at
// equal quality. log-rate is interpolated as a function of quality over the
// overlapping quality interval. Negative means `test` needs fewer bits.
double bd_rate(std::span<const double> anchor_rate, std::span<const double> anchor_quality,
               std::span<const double> test_rate, std::span<const double> test_quality,
               Orientation orientation = Orientation::higher_is_better);

double bd_rate(const RDCurve& anchor, const RDCurve& test, const std::string& metric);

}  // namespace dlf::eval
