#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "dlf/entropy/cdf.hpp"
#include "dlf/entropy/schedule.hpp"

using namespace dlf;
using namespace dlf::entropy;

namespace {

std::vector<std::uint32_t> widths(const bits::CdfTable& t) {
    std::vector<std::uint32_t> w;
    for (int s = 0; s < t.size(); ++s) w.push_back(t.width(s));
    return w;
}

}  // namespace

TEST_CASE("build_cdf: exact tables") {
    const std::vector<double> uniform4(4, 0.25);
    CHECK(widths(build_cdf(uniform4)) == std::vector<std::uint32_t>{16384, 16384, 16384, 16384});
    const std::vector<double> dyadic = {0.5, 0.25, 0.25};
    CHECK(widths(build_cdf(dyadic)) == std::vector<std::uint32_t>{32768, 16384, 16384});
}

TEST_CASE("build_cdf: every symbol keeps width >= 1 over a small-alphabet sweep") {
    // All PMFs over alphabets of size 1..5 whose entries come from a grid
    // containing zeros, tiny masses and large masses.
    const std::vector<double> grid = {0.0, 1e-9, 1e-5, 0.001, 0.3, 1.0, 1000.0};
    for (std::size_t n = 1; n <= 5; ++n) {
        std::vector<std::size_t> digit(n, 0);
        while (true) {
            std::vector<double> pmf(n);
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += (pmf[i] = grid[digit[i]]);
            if (sum > 0.0) {
                const auto t = build_cdf(pmf);
                REQUIRE_NOTHROW(t.validate());
                REQUIRE(t.size() == static_cast<int>(n));
            }
            std::size_t k = 0;
            while (k < n && ++digit[k] == grid.size()) digit[k++] = 0;
            if (k == n) break;
        }
    }
    // And a 255-symbol alphabet with almost all mass on one symbol.
    std::vector<double> peaked(255, 0.0);
    peaked[127] = 1.0;
    REQUIRE_NOTHROW(build_cdf(peaked).validate());
}

TEST_CASE("laplace: closed-form masses") {
    // mu = 0, b = 1, symbol 0: 1 - exp(-1/2).
    const double m = laplace_interval_mass(-0.5, 0.5, 0.0, 1.0);
    CHECK(m == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-14));
    CHECK(-std::log2(m) == doctest::Approx(1.3455).epsilon(1e-4));
    // Far tail keeps relative precision.
    const double tail = laplace_interval_mass(59.5, 60.5, 0.0, 1.0);
    CHECK(tail == doctest::Approx(0.5 * (std::exp(-59.5) - std::exp(-60.5))).epsilon(1e-12));
    // Symmetry.
    CHECK(laplace_interval_mass(2.5, 3.5, 0.3, 0.7) ==
          doctest::Approx(laplace_interval_mass(-3.5, -2.5, -0.3, 0.7)).epsilon(1e-12));
}

TEST_CASE("discretized laplace pmf: normalized and floored") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> mu(-150.0, 150.0), lb(-4.0, 5.0);
    for (int t = 0; t < 200; ++t) {
        const auto pmf = discretized_laplace_pmf(mu(rng), std::exp(lb(rng)), 127);
        REQUIRE(pmf.size() == 255);
        double sum = 0.0;
        for (double p : pmf) {
            REQUIRE(p >= kProbFloor);
            sum += p;
        }
        REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("quadtree schedule: fixed examples") {
    const auto s22 = quadtree_schedule(3, 2, 2);
    for (const auto& g : s22.groups) CHECK(g.size() == 3);  // one spatial position x 3 channels

    const auto s44 = quadtree_schedule(1, 4, 4);
    for (const auto& g : s44.groups) CHECK(g.size() == 4);

    const auto s11 = quadtree_schedule(2, 1, 1);
    CHECK(s11.groups[0].size() == 2);
    CHECK(s11.groups[1].empty());
    CHECK(s11.groups[2].empty());
    CHECK(s11.groups[3].empty());
}

TEST_CASE("quadtree schedule: groups partition the index set") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const int c = 1 + static_cast<int>(rng() % 4), h = 1 + static_cast<int>(rng() % 13),
                  w = 1 + static_cast<int>(rng() % 13);
        const auto s = quadtree_schedule(c, h, w);
        std::set<std::tuple<int, int, int>> seen;
        for (int g = 0; g < kGroupCount; ++g)
            for (const auto& p : s.groups[static_cast<std::size_t>(g)]) {
                REQUIRE(group_of(p.y, p.x) == g);
                REQUIRE(seen.insert({p.channel, p.y, p.x}).second);
            }
        REQUIRE(seen.size() == static_cast<std::size_t>(c * h * w));
        REQUIRE(s.total() == seen.size());
    }
}
