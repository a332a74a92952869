#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance run. None of them call into the code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "dlf/bits/range_coder.hpp"
#include "dlf/entropy/cdf.hpp"

namespace dlf::oracle {

// Random coding table: a mix of flat and very peaked shapes.
inline bits::CdfTable random_table(std::mt19937_64& rng, int max_size = 300) {
    std::uniform_int_distribution<int> size_d(1, max_size);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = size_d(rng);
    std::vector<double> pmf(static_cast<std::size_t>(n));
    const double peak = u(rng) < 0.3 ? 200.0 : 1.0;
    for (auto& p : pmf) p = std::pow(u(rng), peak) + 1e-12;
    return entropy::build_cdf(pmf);
}

// Draws a symbol with the table's own probabilities.
inline int sample(const bits::CdfTable& t, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> u(0, bits::kCdfTotal - 1);
    const auto v = u(rng);
    int s = 0;
    while (t.cdf[static_cast<std::size_t>(s) + 1] <= v) ++s;
    return s;
}

// Reference packer: builds the bit string explicitly, then groups by 8.
inline std::vector<std::uint8_t> pack_indices(const std::vector<std::uint32_t>& idx, int width) {
    std::vector<int> bitstring;
    for (auto v : idx)
        for (int b = width - 1; b >= 0; --b) bitstring.push_back(static_cast<int>((v >> b) & 1u));
    while (bitstring.size() % 8) bitstring.push_back(0);
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < bitstring.size(); i += 8) {
        int byte = 0;
        for (int j = 0; j < 8; ++j) byte = byte * 2 + bitstring[i + static_cast<std::size_t>(j)];
        out.push_back(static_cast<std::uint8_t>(byte));
    }
    return out;
}

// Exhaustive nearest neighbour in double, lowest index on ties.
inline std::int64_t nearest(const std::vector<double>& token, const std::vector<std::vector<double>>& book) {
    std::int64_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < book.size(); ++k) {
        double d = 0.0;
        for (std::size_t c = 0; c < token.size(); ++c) d += (token[c] - book[k][c]) * (token[c] - book[k][c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::int64_t>(k);
        }
    }
    return best;
}

inline double laplace_cdf(double x, double mu, double b) {
    return x < mu ? 0.5 * std::exp((x - mu) / b) : 1.0 - 0.5 * std::exp(-(x - mu) / b);
}

// Detail symbols drawn from a rounded Laplace with a random spread,
// sometimes including both alphabet extremes.
inline std::vector<int> random_symbols(std::mt19937_64& rng, std::size_t n, int smax) {
    std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9);
    const double b = std::uniform_real_distribution<double>(0.2, 6.0)(rng);
    std::vector<int> out(n);
    for (auto& s : out) {
        const double p = u(rng);
        const double v = p < 0.5 ? b * std::log(2 * p) : -b * std::log(2 * (1 - p));
        s = static_cast<int>(std::clamp(std::lround(v), -static_cast<long>(smax), static_cast<long>(smax)));
    }
    if (n > 2 && rng() % 4 == 0) {
        out[0] = smax;
        out[1] = -smax;
    }
    return out;
}

// Monotone cubic interpolation with slopes from the Fritsch-Carlson rules,
// evaluated through the cubic Hermite basis.
struct MonotoneCubic {
    std::vector<double> x, y, m;

    MonotoneCubic(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
        const std::size_t n = x.size();
        std::vector<double> s(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) s[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        m.assign(n, 0.0);
        if (n == 2) {
            m[0] = m[1] = s[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (s[i - 1] == 0.0 || s[i] == 0.0 || (s[i - 1] > 0) != (s[i] > 0)) continue;
            const double ha = x[i] - x[i - 1], hb = x[i + 1] - x[i];
            m[i] = 3.0 * (ha + hb) / ((2.0 * hb + ha) / s[i - 1] + (hb + 2.0 * ha) / s[i]);
        }
        auto edge = [](double h0, double h1, double s0, double s1) {
            const double d = ((2 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if ((d > 0) != (s0 > 0) || d == 0.0) return 0.0;
            if ((s0 > 0) != (s1 > 0) && std::fabs(d) > 3 * std::fabs(s0)) return 3 * s0;
            return d;
        };
        m[0] = edge(x[1] - x[0], x[2] - x[1], s[0], s[1]);
        m[n - 1] = edge(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], s[n - 2], s[n - 3]);
    }

    double at(double q) const {
        std::size_t k = 0;
        while (k + 2 < x.size() && q > x[k + 1]) ++k;
        const double h = x[k + 1] - x[k], t = (q - x[k]) / h;
        const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
        const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
        return h00 * y[k] + h10 * h * m[k] + h01 * y[k + 1] + h11 * h * m[k + 1];
    }
};

// BD-rate (higher-is-better quality) by a dense trapezoid rule over the
// common quality range.
inline double bd_rate(const std::vector<double>& ra, const std::vector<double>& qa, const std::vector<double>& rt,
                      const std::vector<double>& qt) {
    auto build = [](const std::vector<double>& r, const std::vector<double>& q) {
        std::vector<std::size_t> order(r.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return q[a] < q[b]; });
        std::vector<double> xs, ys;
        for (auto i : order) {
            xs.push_back(q[i]);
            ys.push_back(std::log(r[i]));
        }
        return MonotoneCubic(xs, ys);
    };
    const auto a = build(ra, qa), t = build(rt, qt);
    const double lo = std::max(a.x.front(), t.x.front()), hi = std::min(a.x.back(), t.x.back());
    const int steps = 200000;
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double q = lo + (hi - lo) * i / steps;
        const double wgt = (i == 0 || i == steps) ? 0.5 : 1.0;
        acc += wgt * (t.at(q) - a.at(q));
    }
    return (std::exp(acc / steps) - 1.0) * 100.0;
}

}  // namespace dlf::oracle
