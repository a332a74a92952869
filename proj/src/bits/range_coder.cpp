#include "dlf/bits/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dlf/error.hpp"

namespace dlf::bits {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
constexpr std::size_t kFlushBytes = 5;
}  // namespace

void CdfTable::validate() const {
    require(cdf.size() >= 2, ErrorKind::format, "cdf table needs at least one symbol");
    require(cdf.front() == 0, ErrorKind::format, "cdf must start at 0");
    require(cdf.back() == kCdfTotal, ErrorKind::format, "cdf must end at 2^16");
    for (std::size_t i = 1; i < cdf.size(); ++i)
        require(cdf[i] > cdf[i - 1], ErrorKind::format, "cdf symbol width must be >= 1");
}

CdfTable uniform_cdf(int alphabet_size) {
    require(alphabet_size >= 1 && static_cast<std::uint32_t>(alphabet_size) <= kCdfTotal,
            ErrorKind::invalid_input, "uniform alphabet size out of range");
    CdfTable t;
    t.cdf.resize(static_cast<std::size_t>(alphabet_size) + 1);
    const auto n = static_cast<std::uint64_t>(alphabet_size);
    for (std::uint64_t i = 0; i <= n; ++i)
        t.cdf[i] = static_cast<std::uint32_t>(i * kCdfTotal / n);
    return t;
}

double ideal_bits(const CdfTable& table, int symbol) {
    return -std::log2(static_cast<double>(table.width(symbol)) / kCdfTotal);
}

void RangeEncoder::encode(int symbol, const CdfTable& table) {
    require(!finished_, ErrorKind::invalid_input, "encoder already finished");
    if (symbol < 0 || symbol >= table.size())
        fail(ErrorKind::invalid_input, "symbol " + std::to_string(symbol) + " outside alphabet of size " +
                                           std::to_string(table.size()));
    const std::uint32_t width = table.width(symbol);
    require(width > 0, ErrorKind::invalid_input, "zero-width symbol");
    const std::uint32_t r = range_ >> kCdfPrecisionBits;
    low_ += static_cast<std::uint64_t>(r) * table.low(symbol);
    range_ = r * width;
    while (range_ < kTop) {
        range_ <<= 8;
        shift_low();
    }
}

void RangeEncoder::shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
        const auto carry = static_cast<std::uint8_t>(low_ >> 32);
        std::uint8_t pending = cache_;
        do {
            out_.push_back(static_cast<std::uint8_t>(pending + carry));
            pending = 0xFF;
        } while (--cache_size_ != 0);
        cache_ = static_cast<std::uint8_t>(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
    require(!finished_, ErrorKind::invalid_input, "encoder already finished");
    for (std::size_t i = 0; i < kFlushBytes; ++i) shift_low();
    finished_ = true;
    return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> payload) : payload_(payload) {
    require(payload_.size() >= kFlushBytes, ErrorKind::length, "range payload shorter than flush");
    require(payload_[0] == 0, ErrorKind::format, "range payload must start with a zero byte");
    for (std::size_t i = 0; i < kFlushBytes; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
    require(pos_ < payload_.size(), ErrorKind::length, "range payload truncated");
    return payload_[pos_++];
}

int RangeDecoder::decode(const CdfTable& table) {
    const std::uint32_t r = range_ >> kCdfPrecisionBits;
    const std::uint32_t target = code_ / r;
    require(target < kCdfTotal, ErrorKind::format, "corrupt range payload");
    // Largest symbol whose low bound is <= target.
    const auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), target);
    const int symbol = static_cast<int>(it - table.cdf.begin()) - 1;
    require(symbol >= 0 && symbol < table.size(), ErrorKind::format, "corrupt range payload");
    code_ -= r * table.low(symbol);
    range_ = r * table.width(symbol);
    while (range_ < kTop) {
        range_ <<= 8;
        code_ = (code_ << 8) | next_byte();
    }
    return symbol;
}

void RangeDecoder::finish() const {
    require(pos_ == payload_.size(), ErrorKind::format,
            "range payload has " + std::to_string(payload_.size() - pos_) + " trailing bytes");
}

std::vector<std::uint8_t> range_encode(std::span<const int> symbols, const CdfProvider& provider) {
    RangeEncoder enc;
    for (std::size_t i = 0; i < symbols.size(); ++i)
        enc.encode(symbols[i], provider(i, symbols.first(i)));
    return enc.finish();
}

std::vector<int> range_decode(std::span<const std::uint8_t> payload, const CdfProvider& provider,
                              std::size_t count) {
    std::vector<int> out;
    if (count == 0 && payload.empty()) return out;
    RangeDecoder dec(payload);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const CdfTable& table = provider(i, std::span<const int>(out));
        out.push_back(dec.decode(table));
    }
    dec.finish();
    return out;
}

}  // namespace dlf::bits
