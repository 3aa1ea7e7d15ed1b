#pragma once

#include <cstdint>
#include <vector>

#include "qfge/errors.hpp"

namespace qfge {

// MSB-first bit packing.
class BitWriter {
  public:
    void put(uint64_t bits, int width) {
        for (int i = width - 1; i >= 0; --i) {
            if (pos_ == 0) bytes_.push_back(0);
            bytes_.back() |= static_cast<uint8_t>(((bits >> i) & 1u) << (7 - pos_));
            pos_ = (pos_ + 1) & 7;
        }
        bit_count_ += width;
    }
    const std::vector<uint8_t>& bytes() const { return bytes_; }
    uint64_t bit_count() const { return bit_count_; }

  private:
    std::vector<uint8_t> bytes_;
    int pos_ = 0;
    uint64_t bit_count_ = 0;
};

class BitReader {
  public:
    BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
    uint64_t get(int width) {
        uint64_t v = 0;
        for (int i = 0; i < width; ++i) v = (v << 1) | get1();
        return v;
    }
    uint32_t get1() {
        size_t byte = bit_ >> 3;
        if (byte >= size_) throw DataError("bitstream: read past end");
        uint32_t b = (data_[byte] >> (7 - (bit_ & 7))) & 1u;
        ++bit_;
        return b;
    }

  private:
    const uint8_t* data_;
    size_t size_;
    size_t bit_ = 0;
};

}  // namespace qfge
