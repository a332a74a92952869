#pragma once

#include <span>
#include <vector>

#include "dlf/bits/range_coder.hpp"

namespace dlf::entropy {

// Probability floor; every symbol of a coding PMF gets at least this mass.
inline constexpr double kProbFloor = 1.0 / 65536.0;

// Integer table with total 2^precision_bits. Each width is round(p * total)
// clamped to >= 1; the rounding residue is settled on the widest symbols.
bits::CdfTable build_cdf(std::span<const double> pmf, int precision_bits = bits::kCdfPrecisionBits);

// P(lo < X <= hi) for X ~ Laplace(mu, scale), evaluated on the side of the
// distribution where the CDF is small so tail masses keep full precision.
double laplace_interval_mass(double lo, double hi, double mu, double scale);

// Discretized Laplace over the integer alphabet [-symbol_max, symbol_max],
// renormalized over the alphabet and mixed with the floor:
//   p(s) = floor + (1 - n * floor) * mass(s - 1/2, s + 1/2) / Z
std::vector<double> discretized_laplace_pmf(double mu, double scale, int symbol_max,
                                            double floor = kProbFloor);

}  // namespace dlf::entropy
