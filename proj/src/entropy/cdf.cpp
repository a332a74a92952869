#include "dlf/entropy/cdf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dlf/error.hpp"

namespace dlf::entropy {

bits::CdfTable build_cdf(std::span<const double> pmf, int precision_bits) {
    require(precision_bits >= 1 && precision_bits <= 30, ErrorKind::invalid_input, "bad cdf precision");
    const std::int64_t total = std::int64_t{1} << precision_bits;
    const auto n = static_cast<std::int64_t>(pmf.size());
    require(n >= 1 && n <= total, ErrorKind::invalid_input, "pmf size must be in [1, 2^precision]");
    double sum = 0.0;
    for (double p : pmf) {
        require(std::isfinite(p) && p >= 0.0, ErrorKind::invalid_input, "pmf entries must be finite and >= 0");
        sum += p;
    }
    require(sum > 0.0, ErrorKind::invalid_input, "pmf has zero mass");

    std::vector<std::int64_t> width(pmf.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        width[i] = std::max<std::int64_t>(1, std::llround(pmf[i] / sum * static_cast<double>(total)));
        assigned += width[i];
    }
    std::int64_t residue = total - assigned;
    while (residue != 0) {
        const auto widest = static_cast<std::size_t>(std::max_element(width.begin(), width.end()) - width.begin());
        if (residue > 0) {
            width[widest] += residue;
            residue = 0;
        } else {
            const std::int64_t take = std::min(-residue, width[widest] - 1);
            width[widest] -= take;
            residue += take;
        }
    }

    bits::CdfTable table;
    table.cdf.resize(pmf.size() + 1);
    table.cdf[0] = 0;
    for (std::size_t i = 0; i < pmf.size(); ++i)
        table.cdf[i + 1] = table.cdf[i] + static_cast<std::uint32_t>(width[i]);
    return table;
}

double laplace_interval_mass(double lo, double hi, double mu, double scale) {
    require(scale > 0.0, ErrorKind::invalid_input, "laplace scale must be positive");
    double a = (lo - mu) / scale;
    double c = (hi - mu) / scale;
    // Mirror into the lower half so the subtraction below is between small numbers.
    if (a + c > 0.0) {
        const double t = -a;
        a = -c;
        c = t;
    }
    auto cdf = [](double x) { return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x); };
    return std::max(0.0, cdf(c) - cdf(a));
}

std::vector<double> discretized_laplace_pmf(double mu, double scale, int symbol_max, double floor) {
    require(symbol_max >= 0, ErrorKind::invalid_input, "symbol_max must be >= 0");
    const auto n = static_cast<std::size_t>(2 * symbol_max + 1);
    require(floor >= 0.0 && floor * static_cast<double>(n) < 1.0, ErrorKind::invalid_input, "floor too large");
    std::vector<double> pmf(n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(static_cast<int>(i) - symbol_max);
        pmf[i] = laplace_interval_mass(s - 0.5, s + 0.5, mu, scale);
        z += pmf[i];
    }
    const double keep = 1.0 - static_cast<double>(n) * floor;
    for (double& p : pmf) p = z > 0.0 ? floor + keep * p / z : 1.0 / static_cast<double>(n);
    return pmf;
}

}  // namespace dlf::entropy
