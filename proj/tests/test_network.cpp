#undef CHECK  // torch defines a CHECK macro of its own
#include <doctest.h>

#include "dlf/error.hpp"
#include "dlf/net/model.hpp"
#include "model_fixtures.hpp"

using namespace dlf;
using namespace dlf::net;

TEST_CASE("network: shape algebra at the default width") {
    torch::manual_seed(0);
    DLFModel m{ModelConfig{}};
    m->eval();
    torch::NoGradGuard g;
    const auto& c = m->config();
    for (int side : {256, 512}) {
        auto x = torch::rand({1, 3, side, side});
        auto emb = m->embed(x);
        const int h = side / 16;
        CHECK(emb.sizes() == torch::IntArrayRef({1, c.embed_dim, h, h}));
        auto enc = m->dual_encode(emb);
        const auto n = enc.y_s.size(1);
        CHECK(n * 256 == h * h);
        CHECK(enc.y_s.sizes() == torch::IntArrayRef({1, n, 32, c.embed_dim}));
        CHECK(enc.y_d.sizes() == torch::IntArrayRef({1, c.detail_dim, h / 2, h / 2}));
        if (side == 256) {
            auto dec = m->dual_decode(enc.y_s, enc.y_d);
            auto fused = m->fuse(dec.h_d, dec.h_s);
            auto target = m->auxiliary(x);
            for (const auto& f : {dec.h_s, dec.h_d, fused, target})
                CHECK(f.sizes() == torch::IntArrayRef({1, c.embed_dim, h, h}));
            CHECK(m->synthesize(fused).sizes() == torch::IntArrayRef({1, 3, side, side}));
        }
    }
}

TEST_CASE("network: grids that do not tile into windows are rejected") {
    auto m = testing::tiny_model();
    torch::NoGradGuard g;
    auto emb = torch::zeros({1, 32, 6, 4});
    CHECK_THROWS_AS(m->dual_encode(emb), Error);
    CHECK_THROWS_AS(m->embed(torch::zeros({1, 3, 20, 16})), Error);
    auto ys = torch::zeros({1, 2, 8, 32}), yd = torch::zeros({1, 8, 2, 2});
    CHECK_THROWS_AS(m->dual_decode(ys, yd), Error);
}

TEST_CASE("interactive transform: identity at initialization, shape-checked") {
    torch::manual_seed(3);
    InteractiveTransform it(32, 4, 4, 2, true);
    auto f_s = torch::randn({4, 16 + 8, 32});
    auto f_d = torch::randn({1, 32, 8, 8});  // 2 x 2 windows
    auto [s, d] = it->forward(f_s, f_d);
    CHECK(torch::equal(s, f_s));
    CHECK(torch::equal(d, f_d));
    CHECK_THROWS_AS(it->forward(torch::randn({3, 24, 32}), f_d), Error);
}

TEST_CASE("network: encoding is deterministic") {
    auto m = testing::tiny_model(2);
    torch::NoGradGuard g;
    auto x = torch::rand({2, 3, 64, 128});
    auto a = m->encode(x), b = m->encode(x);
    CHECK(torch::equal(a.y_s, b.y_s));
    CHECK(torch::equal(a.y_d, b.y_d));
}

TEST_CASE("network: semantic windows are independent without interaction") {
    auto m = testing::tiny_model(4);
    testing::randomize_interaction(m, 5);
    torch::NoGradGuard g;
    auto x = torch::rand({1, 3, 64, 128});  // two windows side by side
    auto x2 = x.clone();
    x2.narrow(3, 64, 64).uniform_();  // repaint the right window

    m->interaction = false;
    auto a = m->encode(x).y_s, b = m->encode(x2).y_s;
    CHECK(torch::equal(a[0][0], b[0][0]));
    CHECK_FALSE(torch::equal(a[0][1], b[0][1]));

    m->interaction = true;
    a = m->encode(x).y_s;
    b = m->encode(x2).y_s;
    CHECK_FALSE(torch::equal(a[0][0], b[0][0]));
}

TEST_CASE("network: fuse passes gradient to both branches") {
    auto m = testing::tiny_model(6);
    auto hd = torch::randn({1, 32, 4, 4}, torch::requires_grad());
    auto hs = torch::randn({1, 32, 4, 4}, torch::requires_grad());
    m->fuse(hd, hs).pow(2).sum().backward();
    CHECK(hd.grad().abs().sum().item<double>() > 0.0);
    CHECK(hs.grad().abs().sum().item<double>() > 0.0);
    CHECK_THROWS_AS(m->fuse(hd, torch::randn({1, 32, 4, 8})), Error);
}

TEST_CASE("network: zero detail latent still decodes") {
    auto m = testing::tiny_model(7);
    torch::NoGradGuard g;
    auto dec = m->dual_decode(torch::randn({1, 1, 8, 32}), torch::zeros({1, 8, 2, 2}));
    CHECK(dec.h_d.sizes() == torch::IntArrayRef({1, 32, 4, 4}));
    CHECK(torch::isfinite(dec.h_d).all().item<bool>());
}

TEST_CASE("generate: clamps and crops") {
    auto m = testing::tiny_model(8);
    torch::NoGradGuard g;
    auto img = generate(m, torch::randn({1, 32, 16, 16}) * 10.0, 250, 250);
    CHECK(img.height == 250);
    CHECK(img.width == 250);
    for (float v : img.data) REQUIRE((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("freezing: frozen groups receive no gradient") {
    auto m = testing::tiny_model(9);
    m->train();
    set_trainable(m, {ParamGroup::detail, ParamGroup::interaction, ParamGroup::adaptor});
    auto x = torch::rand({1, 3, 64, 64});
    auto target = m->auxiliary(x);
    auto enc = m->encode(x);
    auto dec = m->dual_decode(enc.y_s, enc.y_d);
    (m->fuse(dec.h_d, dec.h_s) - target).pow(2).mean().backward();
    for (auto& p : m->named_parameters()) {
        const auto grp = param_group(p.key());
        if (grp == ParamGroup::auxiliary || grp == ParamGroup::semantic) {
            INFO(p.key());
            CHECK((!p.value().grad().defined() || p.value().grad().abs().sum().item<double>() == 0.0));
        }
    }
    CHECK(m->adaptor_in->weight.grad().abs().sum().item<double>() > 0.0);
}
