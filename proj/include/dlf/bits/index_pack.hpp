#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dlf::bits {

// ceil(log2 K); 0 for K == 1.
int index_bit_width(std::uint32_t codebook_size);

// Fixed-length codes, MSB first, zero padded to a byte boundary.
std::vector<std::uint8_t> pack_indices(std::span<const std::uint32_t> indices, std::uint32_t codebook_size);
std::vector<std::uint32_t> unpack_indices(std::span<const std::uint8_t> bytes, std::uint32_t codebook_size,
                                          std::size_t count);

std::size_t packed_size(std::size_t count, std::uint32_t codebook_size);

}  // namespace dlf::bits
