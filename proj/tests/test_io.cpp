#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include <unistd.h>

#include "dlf/error.hpp"
#include "dlf/io/config.hpp"
#include "dlf/io/dataset.hpp"
#include "dlf/io/image.hpp"

using namespace dlf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("dlf_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("pad_to_multiple: sizes and replication") {
    CHECK(pad_to_multiple(Image(3, 256, 256)).pixels.height == 256);
    Image img(3, 250, 250);
    img.at(1, 249, 249) = 0.75f;
    const auto p = pad_to_multiple(img);
    CHECK(p.pixels.height == 256);
    CHECK(p.pixels.width == 256);
    CHECK(p.orig_h == 250);
    CHECK(p.orig_w == 250);
    CHECK(p.pixels.at(1, 255, 255) == 0.75f);
    const auto one = pad_to_multiple(Image(3, 1, 1, 0.5f));
    CHECK(one.pixels.height == 16);
    CHECK(one.pixels.width == 16);
    CHECK(pad_to_multiple(Image(3, 20, 300), 256).pixels.width == 512);
    CHECK_THROWS_AS(pad_to_multiple(Image()), Error);
}

TEST_CASE("config: parse, typed access and unknown keys") {
    auto cfg = io::KeyValueConfig::parse("# comment\nstage = 1\nlambda=24.0 # trailing\nlist = 1, 2,3\nflag = yes\n");
    CHECK(cfg.get_int("stage", 0) == 1);
    CHECK(cfg.get_double("lambda", 0.0) == 24.0);
    CHECK(cfg.get_ints("list", {}) == std::vector<int>{1, 2, 3});
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_string("missing", "x") == "x");
    CHECK_THROWS_AS(cfg.require_known({"stage", "lambda"}), Error);
    try {
        cfg.require_known({"stage", "lambda", "list"});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("flag") != std::string::npos);
    }
    CHECK_THROWS_AS(io::KeyValueConfig::parse("stage 1"), Error);
    CHECK_THROWS_AS(io::KeyValueConfig::parse("stage = one").get_int("stage", 0), Error);
}

TEST_CASE("image io: png and ppm round-trip at 8-bit precision") {
    const auto dir = scratch_dir("io");
    std::mt19937_64 rng(1);
    const auto img = io::make_toy_image(rng, 32);
    for (const char* name : {"a.png", "a.ppm"}) {
        io::write_image(dir / name, img);
        const auto back = io::read_image(dir / name);
        REQUIRE(back.same_shape(img));
        for (std::size_t i = 0; i < img.data.size(); ++i) REQUIRE(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
    }
    CHECK_THROWS_AS(io::read_image(dir / "missing.png"), Error);
    fs::remove_all(dir);
}

TEST_CASE("dataset: toy sets are seeded and split by ratio") {
    io::DatasetSpec spec{"toy:20", 32, {0.5, 0.25, 0.25}, 3, 0};
    const auto a = io::load_dataset(spec);
    const auto b = io::load_dataset(spec);
    CHECK(a.train.size() == 10);
    CHECK(a.val.size() == 5);
    CHECK(a.test.size() == 5);
    CHECK(a.train[0].data == b.train[0].data);
    spec.crop = 30;
    CHECK_THROWS_AS(io::load_dataset(spec), Error);
    spec.crop = 32;
    spec.split = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(io::load_dataset(spec), Error);
}

TEST_CASE("dataset: directory ingestion crops deterministically and caches") {
    const auto dir = scratch_dir("ds");
    const auto cache = scratch_dir("cache");
    std::mt19937_64 rng(5);
    for (int i = 0; i < 4; ++i) io::write_png(dir / ("img" + std::to_string(i) + ".png"), io::make_toy_image(rng, 40));
    ::setenv("DLF_CACHE_DIR", cache.c_str(), 1);
    io::DatasetSpec spec{dir.string(), 32, {1.0, 0.0, 0.0}, 9, 0};
    const auto a = io::load_dataset(spec);
    const auto cached = static_cast<int>(std::distance(fs::directory_iterator(cache), fs::directory_iterator()));
    const auto b = io::load_dataset(spec);
    ::unsetenv("DLF_CACHE_DIR");
    CHECK(a.train.size() == 4);
    CHECK(cached == 4);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].height == 32);
        for (std::size_t k = 0; k < a.train[i].data.size(); ++k)
            REQUIRE(std::abs(a.train[i].data[k] - b.train[i].data[k]) <= 0.5f / 255.0f + 1e-6f);
    }
    fs::remove_all(dir);
    fs::remove_all(cache);
    CHECK_THROWS_AS(io::load_dataset(io::DatasetSpec{(dir / "nope").string(), 32, {1, 0, 0}, 0, 0}), Error);
}
