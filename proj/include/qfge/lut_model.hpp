#pragma once

#include <cstdint>
#include <vector>

#include "qfge/activation.hpp"
#include "qfge/train.hpp"

namespace qfge {

// One compiled layer: weights and biases reduced to codebook column indices.
struct LutLayer {
    std::vector<std::vector<int32_t>> weight_idx;  // [unit][input] -> column
    std::vector<int32_t> bias_idx;                 // [unit] -> column
    int fan_in = 0;
    bool has_activation = true;  // false: Identity output layer
};

// Integer-only inference model. Rows 0..L-1 of the mult table are the
// activation levels (also the network-input levels); row L is the bias row
// (activation value 1.0). Entries are round(level * center * 2^s / dx).
struct LutModel {
    int acc_bits = 64;
    int s = 0;

    ActKind act_kind = ActKind::TanhD;
    int levels = 0;  // |A|
    std::vector<double> level_values;
    std::vector<double> centers;  // |W|, for the reference oracle / readout

    std::vector<std::vector<long long>> mult;  // (L+1) x |W|

    double dx = 0.0;
    double x_origin = 0.0;
    int table_len = 0;
    long long pre_offset = 0;  // round(-x_origin * 2^s / dx), added before the shift
    std::vector<int32_t> act_table;          // T entries in [0, L)
    std::vector<double> snapped_boundaries;  // L-1 grid-aligned boundaries

    Head head = Head::SoftmaxCrossEntropy;
    std::vector<LutLayer> layers;

    size_t parameter_count() const {
        size_t n = 0;
        for (const LutLayer& l : layers)
            n += l.bias_idx.size() * (size_t(l.fan_in) + 1);
        return n;
    }
};

}  // namespace qfge
