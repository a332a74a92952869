#include "dlf/bits/index_pack.hpp"

#include <string>

#include "dlf/error.hpp"

namespace dlf::bits {

int index_bit_width(std::uint32_t codebook_size) {
    require(codebook_size >= 1, ErrorKind::invalid_input, "codebook size must be >= 1");
    int bits = 0;
    while ((std::uint64_t{1} << bits) < codebook_size) ++bits;
    return bits;
}

std::size_t packed_size(std::size_t count, std::uint32_t codebook_size) {
    return (count * static_cast<std::size_t>(index_bit_width(codebook_size)) + 7) / 8;
}

std::vector<std::uint8_t> pack_indices(std::span<const std::uint32_t> indices, std::uint32_t codebook_size) {
    const int width = index_bit_width(codebook_size);
    std::vector<std::uint8_t> out(packed_size(indices.size(), codebook_size), 0);
    std::size_t bitpos = 0;
    for (std::uint32_t index : indices) {
        if (index >= codebook_size)
            fail(ErrorKind::invalid_input,
                 "index " + std::to_string(index) + " >= codebook size " + std::to_string(codebook_size));
        for (int b = width - 1; b >= 0; --b, ++bitpos)
            if ((index >> b) & 1u) out[bitpos / 8] |= static_cast<std::uint8_t>(0x80u >> (bitpos % 8));
    }
    return out;
}

std::vector<std::uint32_t> unpack_indices(std::span<const std::uint8_t> bytes, std::uint32_t codebook_size,
                                          std::size_t count) {
    const int width = index_bit_width(codebook_size);
    const std::size_t expected = packed_size(count, codebook_size);
    if (bytes.size() != expected)
        fail(ErrorKind::length, "packed index payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                                    std::to_string(expected));
    std::vector<std::uint32_t> out(count, 0);
    std::size_t bitpos = 0;
    for (auto& index : out) {
        for (int b = 0; b < width; ++b, ++bitpos)
            index = (index << 1) | ((bytes[bitpos / 8] >> (7 - bitpos % 8)) & 1u);
        if (index >= codebook_size) fail(ErrorKind::format, "decoded index outside codebook");
    }
    for (; bitpos < bytes.size() * 8; ++bitpos)
        if ((bytes[bitpos / 8] >> (7 - bitpos % 8)) & 1u) fail(ErrorKind::format, "nonzero index padding bits");
    return out;
}

}  // namespace dlf::bits
