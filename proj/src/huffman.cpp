#include "qfge/huffman.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "qfge/bitstream.hpp"
#include "qfge/errors.hpp"

namespace qfge {

std::vector<uint8_t> huffman_code_lengths(const std::vector<uint64_t>& counts) {
    const size_t n = counts.size();
    std::vector<uint8_t> lengths(n, 0);
    std::vector<int> used;
    for (size_t s = 0; s < n; ++s)
        if (counts[s] > 0) used.push_back(static_cast<int>(s));
    if (used.empty()) return lengths;
    if (used.size() == 1) {
        lengths[used[0]] = 1;
        return lengths;
    }

    // Node tree; leaves first, internal nodes appended.
    struct Node {
        uint64_t weight;
        int left = -1, right = -1;
    };
    std::vector<Node> nodes;
    using Entry = std::pair<uint64_t, int>;  // (weight, node id); id breaks ties
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (int s : used) {
        heap.push({counts[s], static_cast<int>(nodes.size())});
        nodes.push_back({counts[s]});
    }
    while (heap.size() > 1) {
        auto [wa, a] = heap.top();
        heap.pop();
        auto [wb, b] = heap.top();
        heap.pop();
        heap.push({wa + wb, static_cast<int>(nodes.size())});
        nodes.push_back({wa + wb, a, b});
    }
    // Depth-first depth assignment; leaf order matches `used`.
    std::vector<std::pair<int, int>> stack{{heap.top().second, 0}};
    std::vector<int> leaf_depth(used.size());
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        const Node& node = nodes[id];
        if (node.left < 0) {
            leaf_depth[id] = depth;  // leaves were pushed first, id < used.size()
        } else {
            stack.push_back({node.left, depth + 1});
            stack.push_back({node.right, depth + 1});
        }
    }
    for (size_t i = 0; i < used.size(); ++i)
        lengths[used[i]] = static_cast<uint8_t>(leaf_depth[i]);
    return lengths;
}

namespace {

// Canonical codes: symbols ordered by (length, symbol index).
std::vector<uint32_t> canonical_codes(const std::vector<uint8_t>& lengths) {
    int max_len = 0;
    for (uint8_t l : lengths) max_len = std::max<int>(max_len, l);
    std::vector<uint32_t> count_per_len(max_len + 1, 0);
    for (uint8_t l : lengths)
        if (l) ++count_per_len[l];
    std::vector<uint32_t> next(max_len + 1, 0);
    uint32_t code = 0;
    for (int l = 1; l <= max_len; ++l) {
        code = (code + (l > 1 ? count_per_len[l - 1] : 0)) << 1;
        next[l] = code;
    }
    std::vector<uint32_t> codes(lengths.size(), 0);
    for (size_t s = 0; s < lengths.size(); ++s)
        if (lengths[s]) codes[s] = next[lengths[s]]++;
    return codes;
}

}  // namespace

HuffmanEncoded entropy_encode_indices(const std::vector<int32_t>& indices,
                                      int num_symbols) {
    std::vector<uint64_t> counts(num_symbols, 0);
    for (int32_t i : indices) {
        if (i < 0 || i >= num_symbols)
            throw std::invalid_argument("entropy_encode_indices: index out of range");
        ++counts[i];
    }
    HuffmanEncoded enc;
    enc.lengths = huffman_code_lengths(counts);
    enc.symbol_count = indices.size();
    std::vector<uint32_t> codes = canonical_codes(enc.lengths);
    BitWriter bw;
    for (int32_t i : indices) bw.put(codes[i], enc.lengths[i]);
    enc.payload = bw.bytes();
    enc.bit_count = bw.bit_count();
    return enc;
}

std::vector<int32_t> entropy_decode_indices(const HuffmanEncoded& enc) {
    const auto& lengths = enc.lengths;
    int max_len = 0;
    for (uint8_t l : lengths) max_len = std::max<int>(max_len, l);
    if (max_len == 0) {
        if (enc.symbol_count != 0) throw DataError("huffman: empty code table");
        return {};
    }
    // first_code[l], first_sym_pos[l], and symbols sorted by (length, symbol).
    std::vector<uint32_t> count_per_len(max_len + 1, 0);
    for (uint8_t l : lengths)
        if (l) ++count_per_len[l];
    std::vector<uint32_t> first_code(max_len + 2, 0), sym_base(max_len + 2, 0);
    uint32_t code = 0, base = 0;
    for (int l = 1; l <= max_len; ++l) {
        code = (code + (l > 1 ? count_per_len[l - 1] : 0)) << 1;
        first_code[l] = code;
        sym_base[l] = base;
        base += count_per_len[l];
    }
    std::vector<int32_t> sorted_syms;
    for (int l = 1; l <= max_len; ++l)
        for (size_t s = 0; s < lengths.size(); ++s)
            if (lengths[s] == l) sorted_syms.push_back(static_cast<int32_t>(s));

    BitReader br(enc.payload.data(), enc.payload.size());
    std::vector<int32_t> out;
    out.reserve(enc.symbol_count);
    for (uint64_t n = 0; n < enc.symbol_count; ++n) {
        uint32_t c = 0;
        int l = 0;
        while (true) {
            c = (c << 1) | br.get1();
            ++l;
            if (l > max_len) throw DataError("huffman: invalid codeword");
            uint32_t offset = c - first_code[l];
            if (count_per_len[l] > 0 && c >= first_code[l] && offset < count_per_len[l]) {
                out.push_back(sorted_syms[sym_base[l] + offset]);
                break;
            }
        }
    }
    return out;
}

double empirical_entropy_bits(const std::vector<int32_t>& indices, int num_symbols) {
    std::vector<uint64_t> counts(num_symbols, 0);
    for (int32_t i : indices) ++counts[i];
    double h = 0.0;
    const double n = static_cast<double>(indices.size());
    for (uint64_t c : counts)
        if (c) {
            double p = c / n;
            h -= p * std::log2(p);
        }
    return h;
}

}  // namespace qfge
