#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dlf::bits {

inline constexpr std::array<std::uint8_t, 4> kContainerMagic = {'D', 'L', 'F', '1'};
// Version 1: 16-bit CDF precision, fixed-length semantic indices.
inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 22;

// Layout (little endian):
//   0  magic "DLF1"
//   4  u8  version
//   5  u8  lambda_index
//   6  u32 orig_w
//  10  u32 orig_h
//  14  u32 semantic_len
//  18  u32 detail_len
//  22  semantic payload, then detail payload
struct BitContainer {
    std::uint8_t version = kContainerVersion;
    std::uint8_t lambda_index = 0;
    std::uint32_t orig_w = 0;
    std::uint32_t orig_h = 0;
    std::vector<std::uint8_t> semantic_payload;
    std::vector<std::uint8_t> detail_payload;

    std::size_t total_bytes() const {
        return kContainerHeaderBytes + semantic_payload.size() + detail_payload.size();
    }
    bool operator==(const BitContainer&) const = default;
};

std::vector<std::uint8_t> write_container(const BitContainer& c);
BitContainer read_container(std::span<const std::uint8_t> bytes);

}  // namespace dlf::bits
