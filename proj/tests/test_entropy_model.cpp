#undef CHECK  // torch defines a CHECK macro of its own
#include <doctest.h>

#include <cmath>
#include <random>

#include "dlf/codec/codec.hpp"
#include "dlf/entropy/cdf.hpp"
#include "dlf/entropy/context_model.hpp"
#include "dlf/error.hpp"
#include "model_fixtures.hpp"
#include "oracles.hpp"

using namespace dlf;
using namespace dlf::entropy;

TEST_CASE("laplace bits: agree with an independent discretized Laplace") {
    const int smax = 20;
    for (double mu : {-3.3, 0.0, 0.4, 18.9})
        for (double b : {0.05, 0.7, 3.0, 40.0}) {
            // Oracle: direct CDF differences, renormalized, then the floor mix.
            std::vector<double> mass(2 * smax + 1);
            double z = 0.0;
            for (int s = -smax; s <= smax; ++s) {
                mass[static_cast<std::size_t>(s + smax)] = oracle::laplace_cdf(s + 0.5, mu, b) - oracle::laplace_cdf(s - 0.5, mu, b);
                z += mass[static_cast<std::size_t>(s + smax)];
            }
            auto values = torch::arange(-smax, smax + 1, torch::kFloat64);
            auto bits = laplace_bits(values, torch::full_like(values, mu), torch::full_like(values, b), smax);
            double total = 0.0;
            for (int s = -smax; s <= smax; ++s) {
                const double p = kProbFloor + (1.0 - (2 * smax + 1) * kProbFloor) * mass[static_cast<std::size_t>(s + smax)] / z;
                const double got = bits[s + smax].item<double>();
                REQUIRE(got == doctest::Approx(-std::log2(p)).epsilon(1e-6));
                total += std::exp2(-got);
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
}

TEST_CASE("laplace bits: gradients match finite differences") {
    torch::manual_seed(21);
    const double eps = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        auto v = (torch::randn({1}, torch::kFloat64) * 3.0).requires_grad_(true);
        auto mu = (torch::randn({1}, torch::kFloat64) * 2.0).requires_grad_(true);
        auto b = (torch::rand({1}, torch::kFloat64) * 3.0 + 0.1).requires_grad_(true);
        laplace_bits(v, mu, b, 127).sum().backward();
        for (auto* t : {&v, &mu, &b}) {
            torch::NoGradGuard g;
            auto plus = t->detach().clone() + eps, minus = t->detach().clone() - eps;
            auto f = [&](const torch::Tensor& x) {
                auto vv = t == &v ? x : v.detach();
                auto mm = t == &mu ? x : mu.detach();
                auto bb = t == &b ? x : b.detach();
                return laplace_bits(vv, mm, bb, 127).item<double>();
            };
            const double fd = (f(plus) - f(minus)) / (2 * eps);
            const double an = t->grad().item<double>();
            REQUIRE(std::abs(fd - an) <= 1e-3 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("context model: rate gradient w.r.t. symbols and parameters matches finite differences") {
    torch::manual_seed(22);
    ContextModel cm(4, 8, 127);
    cm->to(torch::kFloat64);
    auto sym = (torch::randn({1, 4, 6, 6}, torch::kFloat64) * 2.0).requires_grad_(true);
    cm->bits(sym).sum().backward();
    const double eps = 1e-6;
    auto total = [&] {
        torch::NoGradGuard g;
        return cm->bits(sym).sum().item<double>();
    };
    std::mt19937_64 rng(3);
    for (int k = 0; k < 12; ++k) {
        const auto i = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(sym.numel()));
        auto flat = sym.detach().view({-1});
        const double an = sym.grad().view({-1})[i].item<double>();
        const double orig = flat[i].item<double>();
        flat[i] = orig + eps;
        const double hi = total();
        flat[i] = orig - eps;
        const double lo = total();
        flat[i] = orig;
        REQUIRE(std::abs((hi - lo) / (2 * eps) - an) <= 1e-3 * std::max(1.0, std::abs(an)));
    }
    for (auto& p : cm->named_parameters()) {
        auto flat = p.value().detach().view({-1});
        for (std::int64_t i : {std::int64_t{0}, flat.numel() / 2}) {
            const double an = p.value().grad().view({-1})[i].item<double>();
            const double orig = flat[i].item<double>();
            flat[i] = orig + eps;
            const double hi = total();
            flat[i] = orig - eps;
            const double lo = total();
            flat[i] = orig;
            INFO(p.key());
            REQUIRE(std::abs((hi - lo) / (2 * eps) - an) <= 1e-3 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("context model: a group never sees its own or later groups") {
    torch::manual_seed(23);
    ContextModel cm(4, 8, 127);
    torch::NoGradGuard ng;
    const int h = 7, w = 6;
    auto base = torch::round(torch::randn({1, 4, h, w}) * 3.0);
    for (int g = 0; g < kGroupCount; ++g) {
        auto later = torch::zeros({1, 1, h, w});
        for (int k = g; k < kGroupCount; ++k) later = later + group_mask(k, h, w);
        auto other = base + later * torch::round(torch::randn({1, 4, h, w}) * 9.0);
        auto [m1, s1] = cm->group_params(base, g);
        auto [m2, s2] = cm->group_params(other, g);
        CHECK(torch::equal(m1, m2));
        CHECK(torch::equal(s1, s2));
    }
    // Group 1 does depend on group 0.
    auto bumped = base + group_mask(0, h, w) * 5.0;
    auto gm = group_mask(1, h, w).to(torch::kBool).expand({1, 4, h, w});
    CHECK_FALSE(torch::equal(cm->group_params(base, 1).first.masked_select(gm),
                             cm->group_params(bumped, 1).first.masked_select(gm)));
}

TEST_CASE("context model: predicting ahead of the decoder is refused") {
    ContextModel cm(2, 4, 127);
    PartialDetail p;
    p.symbols = torch::zeros({1, 2, 4, 4});
    CHECK_NOTHROW(cm->predict(p, 0));
    try {
        cm->predict(p, 2);
        FAIL("expected a causality error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::causality);
    }
    p.filled = {true, true, false, false};
    CHECK_NOTHROW(cm->predict(p, 2));
    CHECK_THROWS_AS(cm->predict(p, 3), Error);
}

TEST_CASE("detail coding: encoder and decoder predictions are bit-identical") {
    auto m = testing::tiny_model(31);
    std::mt19937_64 rng(32);
    const int c = m->config().detail_dim;
    for (int trial = 0; trial < 20; ++trial) {
        const int h2 = 1 + static_cast<int>(rng() % 7), w2 = 1 + static_cast<int>(rng() % 7);
        const auto sym = oracle::random_symbols(rng, static_cast<std::size_t>(c) * h2 * w2, 127);
        std::vector<std::tuple<int, std::vector<float>, std::vector<float>>> enc_log, dec_log;
        auto payload = codec::encode_detail(m, sym, h2, w2,
                                            [&](int g, const auto& mu, const auto& s) { enc_log.emplace_back(g, mu, s); });
        auto back = codec::decode_detail(m, payload, h2, w2,
                                         [&](int g, const auto& mu, const auto& s) { dec_log.emplace_back(g, mu, s); });
        REQUIRE(back == sym);
        REQUIRE(enc_log.size() == dec_log.size());
        for (std::size_t i = 0; i < enc_log.size(); ++i) {
            CHECK(std::get<0>(enc_log[i]) == std::get<0>(dec_log[i]));
            // Bitwise comparison of the float vectors.
            CHECK(std::get<1>(enc_log[i]) == std::get<1>(dec_log[i]));
            CHECK(std::get<2>(enc_log[i]) == std::get<2>(dec_log[i]));
        }
    }
}

TEST_CASE("detail coding: payload stays within the estimate plus overhead") {
    auto m = testing::tiny_model(33);
    std::mt19937_64 rng(34);
    const int c = m->config().detail_dim;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int h2 = 1 + static_cast<int>(rng() % 8), w2 = 1 + static_cast<int>(rng() % 8);
        const auto sym = oracle::random_symbols(rng, static_cast<std::size_t>(c) * h2 * w2, 127);
        const auto payload = codec::encode_detail(m, sym, h2, w2);
        const double est = codec::estimate_detail_bits(m, sym, h2, w2);
        const double actual = 8.0 * static_cast<double>(payload.size());
        REQUIRE(actual <= est + 64.0 + 0.01 * est);
        REQUIRE(codec::decode_detail(m, payload, h2, w2) == sym);
        worst = std::max(worst, actual - est);
    }
    MESSAGE("largest overhead over the estimate: " << worst << " bits");
}

TEST_CASE("detail coding: the training rate matches the coding estimate on integer symbols") {
    auto m = testing::tiny_model(35);
    std::mt19937_64 rng(36);
    const int c = m->config().detail_dim, h2 = 5, w2 = 6;
    const auto sym = oracle::random_symbols(rng, static_cast<std::size_t>(c) * h2 * w2, 127);
    auto t = torch::empty({1, c, h2, w2});
    for (std::size_t i = 0; i < sym.size(); ++i) t.view({-1})[static_cast<std::int64_t>(i)] = sym[i];
    torch::NoGradGuard g;
    const double train_bits = m->det_entropy->bits(t).sum().item<double>();
    const double est = codec::estimate_detail_bits(m, sym, h2, w2);
    CHECK(train_bits == doctest::Approx(est).epsilon(1e-4));
}
