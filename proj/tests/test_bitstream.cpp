#include <doctest.h>

#include <cstring>
#include <random>

#include "dlf/bits/container.hpp"
#include "dlf/bits/index_pack.hpp"
#include "dlf/error.hpp"
#include "oracles.hpp"

using namespace dlf;
using namespace dlf::bits;

TEST_CASE("index packing: fixed examples") {
    CHECK(index_bit_width(4096) == 12);
    CHECK(index_bit_width(1) == 0);
    CHECK(index_bit_width(5) == 3);
    CHECK(pack_indices({}, 4096).empty());
    const std::vector<std::uint32_t> two = {4095, 0};
    CHECK(pack_indices(two, 4096) == std::vector<std::uint8_t>{0xFF, 0xF0, 0x00});
    CHECK(pack_indices(std::vector<std::uint32_t>(32, 7), 4096).size() == 48);
    CHECK(unpack_indices(std::vector<std::uint8_t>{0x00, 0x10, 0x02}, 4096, 2) ==
          std::vector<std::uint32_t>{1, 2});
    CHECK(unpack_indices({}, 4096, 0).empty());
}

TEST_CASE("index packing: errors") {
    CHECK_THROWS_AS(pack_indices(std::vector<std::uint32_t>{4096}, 4096), Error);
    CHECK_THROWS_AS(unpack_indices(std::vector<std::uint8_t>{0x00, 0x10}, 4096, 2), Error);
    // Nonzero padding after a single 12-bit index.
    CHECK_THROWS_AS(unpack_indices(std::vector<std::uint8_t>{0x00, 0x11}, 4096, 1), Error);
}

TEST_CASE("index packing: matches the bit-string oracle and round-trips") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng() % 5000);
        std::vector<std::uint32_t> idx(rng() % 70);
        for (auto& v : idx) v = static_cast<std::uint32_t>(rng() % k);
        const auto packed = pack_indices(idx, k);
        REQUIRE(packed == oracle::pack_indices(idx, index_bit_width(k)));
        REQUIRE(unpack_indices(packed, k, idx.size()) == idx);
    }
}

TEST_CASE("container: layout, round-trip and typed errors") {
    BitContainer c;
    c.lambda_index = 3;
    c.orig_w = 250;
    c.orig_h = 130;
    const auto header_only = write_container(c);
    CHECK(header_only.size() == kContainerHeaderBytes);
    CHECK(header_only.size() == 22);
    CHECK(std::memcmp(header_only.data(), "DLF1", 4) == 0);
    CHECK(header_only[6] == 250);
    CHECK(read_container(header_only) == c);

    c.semantic_payload = {1, 2, 3};
    c.detail_payload = {9, 8};
    auto bytes = write_container(c);
    CHECK(bytes.size() == 22 + 3 + 2);
    CHECK(read_container(bytes) == c);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        read_container(bad_magic);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
    }
    auto bad_version = bytes;
    bad_version[4] = 2;
    try {
        read_container(bad_version);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::version);
    }
    auto truncated = bytes;
    truncated.pop_back();
    try {
        read_container(truncated);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::length);
    }
}

TEST_CASE("container: random payloads round-trip") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 500; ++trial) {
        BitContainer c;
        c.lambda_index = static_cast<std::uint8_t>(rng());
        c.orig_w = static_cast<std::uint32_t>(rng());
        c.orig_h = static_cast<std::uint32_t>(rng());
        c.semantic_payload.resize(rng() % 100);
        c.detail_payload.resize(rng() % 100);
        for (auto& b : c.semantic_payload) b = static_cast<std::uint8_t>(rng());
        for (auto& b : c.detail_payload) b = static_cast<std::uint8_t>(rng());
        const auto bytes = write_container(c);
        REQUIRE(bytes.size() == c.total_bytes());
        REQUIRE(read_container(bytes) == c);
    }
}

TEST_CASE("container: mutated and truncated bytes raise typed errors only") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10000; ++trial) {
        BitContainer c;
        c.lambda_index = static_cast<std::uint8_t>(rng() % 4);
        c.orig_w = 1 + static_cast<std::uint32_t>(rng() % 1000);
        c.orig_h = 1 + static_cast<std::uint32_t>(rng() % 1000);
        c.semantic_payload.resize(rng() % 40);
        c.detail_payload.resize(rng() % 40);
        for (auto& b : c.semantic_payload) b = static_cast<std::uint8_t>(rng());
        for (auto& b : c.detail_payload) b = static_cast<std::uint8_t>(rng());
        auto bytes = write_container(c);
        switch (rng() % 3) {
            case 0: bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
            case 1: bytes.resize(rng() % bytes.size()); break;
            default: bytes.push_back(static_cast<std::uint8_t>(rng())); break;
        }
        try {
            const auto back = read_container(bytes);
            REQUIRE(back.total_bytes() == bytes.size());
        } catch (const Error&) {
        }
    }
}
