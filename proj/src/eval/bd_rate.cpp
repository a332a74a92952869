#include "dlf/eval/bd_rate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dlf/error.hpp"

namespace dlf::eval {

void RDCurve::sort_by_bpp() {
    std::stable_sort(points.begin(), points.end(), [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
}

std::vector<double> RDCurve::rates() const {
    std::vector<double> r;
    for (const auto& p : points) r.push_back(p.bpp);
    return r;
}

std::vector<double> RDCurve::metric(const std::string& name) const {
    std::vector<double> m;
    for (const auto& p : points) {
        auto it = p.metrics.find(name);
        require(it != p.metrics.end(), ErrorKind::invalid_input, "curve " + label + " lacks metric " + name);
        m.push_back(it->second);
    }
    return m;
}

Orientation orientation_of(const std::string& metric) {
    if (metric == "latent_mse" || metric == "mse" || metric == "lpips" || metric == "dists")
        return Orientation::lower_is_better;
    return Orientation::higher_is_better;
}

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    require(x_.size() == y_.size() && x_.size() >= 2, ErrorKind::invalid_input, "pchip needs >= 2 points");
    for (std::size_t i = 1; i < x_.size(); ++i)
        require(x_[i] > x_[i - 1], ErrorKind::invalid_input, "pchip knots must be strictly increasing");
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x_[k + 1] - x_[k];
        delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
        d_[0] = d_[1] = delta[0];
        return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (sign(delta[k - 1]) * sign(delta[k]) <= 0) continue;
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    auto end_slope = [](double h0, double h1, double m0, double m1) {
        double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if (sign(d) != sign(m0)) return 0.0;
        if (sign(m0) != sign(m1) && std::abs(d) > 3.0 * std::abs(m0)) return 3.0 * m0;
        return d;
    };
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::operator()(double at) const {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), at) - x_.begin());
    k = std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, x_.size() - 2);
    const double h = x_[k + 1] - x_[k];
    const double delta = (y_[k + 1] - y_[k]) / h;
    const double c2 = (3.0 * delta - 2.0 * d_[k] - d_[k + 1]) / h;
    const double c3 = (d_[k] + d_[k + 1] - 2.0 * delta) / (h * h);
    const double t = at - x_[k];
    return y_[k] + t * (d_[k] + t * (c2 + t * c3));
}

double Pchip::segment_integral(std::size_t k, double lo, double hi) const {
    const double h = x_[k + 1] - x_[k];
    const double delta = (y_[k + 1] - y_[k]) / h;
    const double c2 = (3.0 * delta - 2.0 * d_[k] - d_[k + 1]) / h;
    const double c3 = (d_[k] + d_[k + 1] - 2.0 * delta) / (h * h);
    auto antiderivative = [&](double t) {
        return t * (y_[k] + t * (d_[k] / 2.0 + t * (c2 / 3.0 + t * c3 / 4.0)));
    };
    return antiderivative(hi - x_[k]) - antiderivative(lo - x_[k]);
}

double Pchip::integral(double lo, double hi) const {
    require(lo >= x_.front() && hi <= x_.back() && lo <= hi, ErrorKind::invalid_input,
            "pchip integral outside knot range");
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < x_.size(); ++k) {
        const double a = std::max(lo, x_[k]), b = std::min(hi, x_[k + 1]);
        if (b > a) total += segment_integral(k, a, b);
    }
    return total;
}

namespace {

// Quality-ascending (quality, log rate) knots.
Pchip log_rate_of_quality(std::span<const double> rate, std::span<const double> quality, Orientation o) {
    require(rate.size() == quality.size() && rate.size() >= 2, ErrorKind::invalid_input,
            "bd-rate needs >= 2 points per curve");
    std::vector<std::size_t> order(rate.size());
    std::iota(order.begin(), order.end(), 0);
    const double flip = o == Orientation::lower_is_better ? -1.0 : 1.0;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return flip * quality[a] < flip * quality[b]; });
    std::vector<double> q, lr;
    for (auto i : order) {
        require(rate[i] > 0.0 && std::isfinite(rate[i]) && std::isfinite(quality[i]), ErrorKind::invalid_input,
                "bd-rate points must have positive finite rate and finite quality");
        q.push_back(flip * quality[i]);
        lr.push_back(std::log(rate[i]));
    }
    return Pchip(std::move(q), std::move(lr));
}

}  // namespace

double bd_rate(std::span<const double> anchor_rate, std::span<const double> anchor_quality,
               std::span<const double> test_rate, std::span<const double> test_quality, Orientation orientation) {
    const auto anchor = log_rate_of_quality(anchor_rate, anchor_quality, orientation);
    const auto test = log_rate_of_quality(test_rate, test_quality, orientation);
    const double lo = std::max(anchor.knots().front(), test.knots().front());
    const double hi = std::min(anchor.knots().back(), test.knots().back());
    require(hi > lo, ErrorKind::invalid_input, "rd curves have no overlapping quality range");
    const double avg = (test.integral(lo, hi) - anchor.integral(lo, hi)) / (hi - lo);
    return (std::exp(avg) - 1.0) * 100.0;
}

double bd_rate(const RDCurve& anchor, const RDCurve& test, const std::string& metric) {
    const auto ar = anchor.rates(), aq = anchor.metric(metric);
    const auto tr = test.rates(), tq = test.metric(metric);
    return bd_rate(ar, aq, tr, tq, orientation_of(metric));
}

}  // namespace dlf::eval
