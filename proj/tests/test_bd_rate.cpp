#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dlf/error.hpp"
#include "dlf/eval/bd_rate.hpp"
#include "dlf/eval/report.hpp"
#include "oracles.hpp"

using namespace dlf;
using namespace dlf::eval;

TEST_CASE("bd-rate: identical curves give zero") {
    const std::vector<double> r = {0.1, 0.2, 0.4, 0.8}, q = {30.0, 32.5, 34.2, 36.0};
    CHECK(bd_rate(r, q, r, q) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("bd-rate: halving every rate at equal quality gives -50%") {
    const std::vector<double> r = {0.1, 0.2, 0.4, 0.8}, q = {30.0, 32.5, 34.2, 36.0};
    std::vector<double> half;
    for (double v : r) half.push_back(v / 2.0);
    CHECK(std::abs(bd_rate(r, q, half, q) + 50.0) < 1e-9);
    // Antisymmetric in log-rate: doubling gives +100%.
    CHECK(std::abs(bd_rate(half, q, r, q) - 100.0) < 1e-9);
}

TEST_CASE("bd-rate: agrees with scipy's PchipInterpolator on a fixed pair") {
    // Frozen from scipy.interpolate.PchipInterpolator(...).integrate on the same data.
    const std::vector<double> ar = {0.1, 0.2, 0.4, 0.8}, aq = {30.0, 32.5, 34.2, 36.0};
    const std::vector<double> tr = {0.09, 0.17, 0.35, 0.75}, tq = {30.2, 32.4, 34.6, 36.1};
    CHECK(bd_rate(ar, aq, tr, tq) == doctest::Approx(-16.93229091451085).epsilon(1e-10));
}

TEST_CASE("bd-rate: random 4-point curves match the dense-trapezoid oracle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> ra, qa, rt, qt;
        double r = 0.01 + 0.05 * u(rng), q = 25.0 + 3.0 * u(rng);
        double r2 = r * (0.6 + 0.8 * u(rng)), q2 = q + u(rng) - 0.5;
        for (int i = 0; i < 4; ++i) {
            ra.push_back(r);
            qa.push_back(q);
            rt.push_back(r2);
            qt.push_back(q2);
            r *= 1.3 + u(rng);
            q += 0.5 + 3.0 * u(rng);
            r2 *= 1.3 + u(rng);
            q2 += 0.5 + 3.0 * u(rng);
        }
        const double got = bd_rate(ra, qa, rt, qt);
        const double want = oracle::bd_rate(ra, qa, rt, qt);
        REQUIRE(std::abs(got - want) <= 0.0005 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("bd-rate: lower-is-better metrics and errors") {
    const std::vector<double> r = {0.1, 0.2, 0.4}, mse = {0.05, 0.03, 0.02};
    std::vector<double> half = {0.05, 0.1, 0.2};
    CHECK(std::abs(bd_rate(r, mse, half, mse, Orientation::lower_is_better) + 50.0) < 1e-9);

    const std::vector<double> q1 = {10.0, 11.0}, q2 = {20.0, 21.0};
    CHECK_THROWS_AS(bd_rate(std::vector<double>{0.1, 0.2}, q1, std::vector<double>{0.1, 0.2}, q2), Error);
    CHECK_THROWS_AS(bd_rate(std::vector<double>{0.1}, std::vector<double>{1.0}, r, mse), Error);
}

TEST_CASE("rd csv: round-trip and report table") {
    RDCurve full{"full", {{0.01, {{"psnr_db", 25.0}, {"latent_mse", 0.3}}}, {0.02, {{"psnr_db", 27.0}, {"latent_mse", 0.2}}}}};
    RDCurve half = full;
    half.label = "half";
    for (auto& p : half.points) p.bpp /= 2.0;
    const auto text = rd_curves_to_csv({full, half});
    const auto back = rd_curves_from_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[1].label == "half");
    CHECK(back[1].points[1].bpp == 0.01);
    CHECK(back[0].points[0].metrics.at("latent_mse") == 0.3);
    const auto table = bd_rate_table(full, {full, half}, {"psnr_db", "latent_mse"});
    CHECK(table.find("| full | 0.00% | 0.00% |") != std::string::npos);
    CHECK(table.find("| half | -50.00% | -50.00% |") != std::string::npos);
}
