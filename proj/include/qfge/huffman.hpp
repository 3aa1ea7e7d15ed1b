#pragma once

#include <cstdint>
#include <vector>

namespace qfge {

// Canonical Huffman over the empirical marginal distribution of the symbols.

// Code length per symbol (0 for symbols that never occur).
std::vector<uint8_t> huffman_code_lengths(const std::vector<uint64_t>& counts);

struct HuffmanEncoded {
    std::vector<uint8_t> lengths;  // one per symbol; the codeword table
    std::vector<uint8_t> payload;
    uint64_t bit_count = 0;
    uint64_t symbol_count = 0;
    double bits_per_symbol() const {
        return symbol_count ? double(bit_count) / double(symbol_count) : 0.0;
    }
};

HuffmanEncoded entropy_encode_indices(const std::vector<int32_t>& indices,
                                      int num_symbols);

std::vector<int32_t> entropy_decode_indices(const HuffmanEncoded& enc);

double empirical_entropy_bits(const std::vector<int32_t>& indices, int num_symbols);

}  // namespace qfge
