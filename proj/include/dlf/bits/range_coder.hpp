#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dlf::bits {

inline constexpr int kCdfPrecisionBits = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfPrecisionBits;

// Cumulative frequency table over symbols [0, size()). cdf.front() == 0,
// cdf.back() == kCdfTotal and every symbol has width >= 1.
struct CdfTable {
    std::vector<std::uint32_t> cdf;

    int size() const { return static_cast<int>(cdf.size()) - 1; }
    std::uint32_t low(int symbol) const { return cdf[static_cast<std::size_t>(symbol)]; }
    std::uint32_t width(int symbol) const {
        return cdf[static_cast<std::size_t>(symbol) + 1] - cdf[static_cast<std::size_t>(symbol)];
    }
    // Throws format error when the table is not a valid coding table.
    void validate() const;
};

CdfTable uniform_cdf(int alphabet_size);

// Bits an ideal coder spends on `symbol` under `table`.
double ideal_bits(const CdfTable& table, int symbol);

// 32-bit range coder with 16-bit probability precision. Carries are
// propagated through a pending-byte counter, so the output is a plain
// byte sequence with no escape codes.
class RangeEncoder {
public:
    void encode(int symbol, const CdfTable& table);
    std::vector<std::uint8_t> finish();

private:
    void shift_low();

    std::uint64_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::uint8_t cache_ = 0;
    std::uint64_t cache_size_ = 1;
    std::vector<std::uint8_t> out_;
    bool finished_ = false;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const std::uint8_t> payload);

    int decode(const CdfTable& table);
    // Verifies that the stream was consumed exactly.
    void finish() const;

private:
    std::uint8_t next_byte();

    std::span<const std::uint8_t> payload_;
    std::size_t pos_ = 0;
    std::uint32_t code_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
};

// Table for symbol i, given the symbols already coded before it.
using CdfProvider =
    std::function<const CdfTable&(std::size_t index, std::span<const int> previous)>;

std::vector<std::uint8_t> range_encode(std::span<const int> symbols, const CdfProvider& provider);
std::vector<int> range_decode(std::span<const std::uint8_t> payload, const CdfProvider& provider,
                              std::size_t count);

}  // namespace dlf::bits
