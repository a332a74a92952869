#include "dlf/bits/container.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dlf/error.hpp"

namespace dlf::bits {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | in[at + static_cast<std::size_t>(i)];
    return v;
}

}  // namespace

std::vector<std::uint8_t> write_container(const BitContainer& c) {
    require(c.version == kContainerVersion, ErrorKind::version, "unsupported container version");
    constexpr auto kMaxLen = std::numeric_limits<std::uint32_t>::max();
    require(c.semantic_payload.size() <= kMaxLen && c.detail_payload.size() <= kMaxLen, ErrorKind::invalid_input,
            "payload too large for container");
    std::vector<std::uint8_t> out;
    out.reserve(c.total_bytes());
    for (std::uint8_t b : kContainerMagic) out.push_back(b);
    out.push_back(c.version);
    out.push_back(c.lambda_index);
    put_u32(out, c.orig_w);
    put_u32(out, c.orig_h);
    put_u32(out, static_cast<std::uint32_t>(c.semantic_payload.size()));
    put_u32(out, static_cast<std::uint32_t>(c.detail_payload.size()));
    out.insert(out.end(), c.semantic_payload.begin(), c.semantic_payload.end());
    out.insert(out.end(), c.detail_payload.begin(), c.detail_payload.end());
    return out;
}

BitContainer read_container(std::span<const std::uint8_t> bytes) {
    require(bytes.size() >= 4 && std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin()),
            ErrorKind::format, "bad container magic");
    require(bytes.size() >= kContainerHeaderBytes, ErrorKind::length, "container header truncated");
    BitContainer c;
    c.version = bytes[4];
    if (c.version != kContainerVersion)
        fail(ErrorKind::version, "unknown container version " + std::to_string(c.version));
    c.lambda_index = bytes[5];
    c.orig_w = get_u32(bytes, 6);
    c.orig_h = get_u32(bytes, 10);
    const std::uint64_t sem = get_u32(bytes, 14);
    const std::uint64_t det = get_u32(bytes, 18);
    const std::uint64_t expected = kContainerHeaderBytes + sem + det;
    if (bytes.size() < expected)
        fail(ErrorKind::length, "container truncated: " + std::to_string(bytes.size()) + " of " +
                                    std::to_string(expected) + " bytes");
    if (bytes.size() > expected)
        fail(ErrorKind::length, "container has " + std::to_string(bytes.size() - expected) + " trailing bytes");
    const auto body = bytes.subspan(kContainerHeaderBytes);
    c.semantic_payload.assign(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(sem));
    c.detail_payload.assign(body.begin() + static_cast<std::ptrdiff_t>(sem), body.end());
    return c;
}

}  // namespace dlf::bits
