#undef CHECK  // torch defines a CHECK macro of its own
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dlf/error.hpp"
#include "dlf/quant/quant.hpp"
#include "oracles.hpp"

using namespace dlf;
using namespace dlf::quant;

TEST_CASE("vq: fixed examples") {
    auto book = torch::tensor({0.0f, 0.0f, 1.0f, 1.0f}).view({2, 2});
    auto r = vq_assign(torch::tensor({0.9f, 0.8f}).view({1, 2}), book);
    CHECK(r.indices[0].item<std::int64_t>() == 1);
    CHECK(torch::equal(r.quantized, torch::tensor({1.0f, 1.0f}).view({1, 2})));

    auto book5 = torch::randn({5, 3});
    auto exact = vq_assign(book5[3].view({1, 3}), book5);
    CHECK(exact.indices[0].item<std::int64_t>() == 3);
    CHECK(torch::equal(exact.quantized[0], book5[3]));

    // (1, 0) is equidistant from entries 0 and 2 (and farther from 1).
    auto tie_book = torch::tensor({0.0f, 0.0f, 5.0f, 5.0f, 2.0f, 0.0f}).view({3, 2});
    CHECK(vq_assign(torch::tensor({1.0f, 0.0f}).view({1, 2}), tie_book).indices[0].item<std::int64_t>() == 0);

    CHECK_THROWS_AS(vq_assign(torch::zeros({1, 2}), torch::zeros({0, 2})), Error);
    CHECK_THROWS_AS(vq_assign(torch::zeros({1, 3}), book), Error);
}

TEST_CASE("vq: matches exhaustive search on 1000 random cases") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 40), c = 1 + static_cast<int>(rng() % 6);
        std::vector<std::vector<double>> book(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(c)));
        std::vector<double> token(static_cast<std::size_t>(c));
        auto tb = torch::empty({k, c}), tt = torch::empty({1, c});
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < c; ++j) {
                const float v = static_cast<float>(n(rng));
                tb[i][j] = v;
                book[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
            }
        for (int j = 0; j < c; ++j) {
            const float v = static_cast<float>(n(rng));
            tt[0][j] = v;
            token[static_cast<std::size_t>(j)] = v;
        }
        REQUIRE(vq_assign(tt, tb).indices[0].item<std::int64_t>() == oracle::nearest(token, book));
    }
}

TEST_CASE("vq: straight-through gradient equals the gradient at the quantized point") {
    torch::manual_seed(2);
    auto book = torch::randn({16, 4}, torch::kFloat64);
    auto y = torch::randn({6, 4}, torch::dtype(torch::kFloat64).requires_grad(true));
    auto w = torch::randn({6, 4}, torch::kFloat64);
    auto loss_of = [&](const torch::Tensor& v) { return (torch::sin(v) * w).sum() + v.pow(3).sum() * 0.1; };

    auto q = vq_assign(y, book).quantized.detach();
    loss_of(straight_through(y, q)).backward();
    auto grad = y.grad();

    // Central differences of the loss around the quantized point.
    const double eps = 1e-6;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 4; ++j) {
            auto plus = q.clone(), minus = q.clone();
            plus[i][j] += eps;
            minus[i][j] -= eps;
            const double fd = (loss_of(plus).item<double>() - loss_of(minus).item<double>()) / (2 * eps);
            const double an = grad[i][j].item<double>();
            REQUIRE(std::abs(fd - an) <= 1e-3 * std::max(1.0, std::abs(an)));
        }
}

TEST_CASE("codebook loss: arithmetic and zero-residual gradient") {
    auto y = torch::zeros({1, 1}), q = torch::full({1, 1}, 2.0);
    CHECK(codebook_loss(y, q, 0.25).item<double>() == doctest::Approx(2.5));
    auto same = torch::randn({3, 5});
    CHECK(codebook_loss(same, same.clone(), 0.25).item<double>() == 0.0);

    auto yy = torch::zeros({2, 3}, torch::requires_grad());
    auto qq = torch::zeros({2, 3}, torch::requires_grad());
    codebook_loss(yy, qq, 0.25).backward();
    CHECK(torch::isfinite(yy.grad()).all().item<bool>());
    CHECK(torch::isfinite(qq.grad()).all().item<bool>());
}

TEST_CASE("sq: rounding examples") {
    auto steps1 = torch::ones({1}), steps_half = torch::full({1}, 0.5);
    auto r = sq_quantize(torch::full({1, 1, 1, 1}, 0.49), steps1, SqMode::round, 127);
    CHECK(r.symbols.item<int>() == 0);
    r = sq_quantize(torch::full({1, 1, 1, 1}, -1.2), steps_half, SqMode::round, 127);
    CHECK(r.symbols.item<int>() == -2);
    CHECK(r.values.item<float>() == doctest::Approx(-1.0));
    auto halves = torch::tensor({2.5f, -2.5f, 0.5f, -0.5f}).view({1, 1, 2, 2});
    CHECK(torch::equal(sq_quantize(halves, steps1, SqMode::round, 127).symbols.flatten(),
                       torch::tensor({3, -3, 1, -1}, torch::kInt32)));
    CHECK(sq_quantize(torch::full({1, 1, 1, 1}, 1e4), steps1, SqMode::round, 127).symbols.item<int>() == 127);
    CHECK_THROWS_AS(sq_quantize(torch::zeros({1, 1, 1, 1}), torch::zeros({1}), SqMode::round, 127), Error);
}

TEST_CASE("sq: round error is at most half a step inside the alphabet") {
    torch::manual_seed(4);
    auto steps = torch::rand({6}) * 2.0 + 0.05;
    auto y = torch::randn({3, 6, 9, 9}) * 5.0;
    auto r = sq_quantize(y, steps, SqMode::round, 127);
    auto st = steps.view({1, -1, 1, 1});
    auto inside = (y / st).abs() <= 127.0;
    CHECK(inside.sum().item<std::int64_t>() > 1000);
    auto err = ((r.values - y).abs() - st / 2.0).masked_select(inside);
    CHECK(err.max().item<double>() <= 1e-5);
    auto clipped = r.symbols.abs().masked_select(~inside);
    CHECK((clipped == 127).all().item<bool>());
}

TEST_CASE("sq: noise mode is bounded and unbiased") {
    torch::manual_seed(5);
    const double step = 0.7;
    auto y = torch::randn({1, 1, 250, 400});  // 1e5 draws
    auto out = sq_quantize(y, torch::full({1}, step), SqMode::noise, 127);
    CHECK_FALSE(out.symbols.defined());
    auto d = (out.values - y).to(torch::kFloat64);
    CHECK(d.abs().max().item<double>() <= step / 2 + 1e-6);
    const double sigma = step / std::sqrt(12.0), n = static_cast<double>(d.numel());
    CHECK(std::abs(d.mean().item<double>()) <= 3.0 * sigma / std::sqrt(n));
}

TEST_CASE("dead codes: rows idle for five epochs are re-seeded") {
    DeadCodeTracker tracker(4);
    auto book = torch::zeros({4, 2});
    auto samples = torch::full({3, 2}, 7.0);
    std::mt19937_64 rng(1);
    for (int epoch = 0; epoch < 4; ++epoch) {
        tracker.observe(torch::tensor({0, 1}, torch::kInt64));
        CHECK(tracker.end_epoch(book, samples, rng) == 0);
    }
    tracker.observe(torch::tensor({0, 1}, torch::kInt64));
    CHECK(tracker.end_epoch(book, samples, rng) == 2);
    CHECK(book[2][0].item<float>() == 7.0f);
    CHECK(book[0][0].item<float>() == 0.0f);
}
