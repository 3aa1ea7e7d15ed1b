#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qfge {

// Integer-only view of a compiled model. Everything reachable from here is
// an integer; the adapter that builds it lives with the model code.
struct IntLayerView {
    std::span<const std::vector<int32_t>> weight_idx;  // per unit
    std::span<const int32_t> bias_idx;
    bool has_activation = true;
};

struct IntNetView {
    int shift = 0;              // s
    long long pre_offset = 0;   // added to each sum before the shift
    int table_len = 0;
    int bias_row = 0;
    std::span<const std::vector<long long>> mult;
    std::span<const int32_t> act_table;
    std::vector<IntLayerView> layers;
};

struct IntTrace {
    std::vector<std::vector<int32_t>> level_idx;  // per hidden layer, per unit
    std::vector<long long> final_sums;            // Identity output layer
};

// Adds, shifts, and table lookups only.
IntTrace forward_int(const IntNetView& net, const std::vector<int32_t>& input_levels);

// Ties resolve to the lowest class index.
int argmax_class(const std::vector<long long>& sums);

}  // namespace qfge
