#pragma once

#include "qfge/codebook.hpp"
#include "qfge/lut_model.hpp"
#include "qfge/train.hpp"

namespace qfge {

struct CompileOptions {
    int acc_bits = 64;    // 32 or 64
    int guard_bits = 8;   // precision floor above ceil(log2(fan_in_max+1))
    int table_len = 0;    // 0 = 4*(L-1)
};

// Largest s meeting both the precision floor (s >= ceil(log2(fan_in+1)) + g)
// and the overflow bound (fan_in+1)*max|entry| < 2^(acc_bits-1).
// max_product = max |level| * max |center| (bias activation 1.0 included).
int choose_scale(int fan_in_max, double max_product, double dx, int acc_bits,
                 int guard_bits);

// (L+1) x |W| table; the appended last row is the bias row (activation 1.0).
// Rounding is half-away-from-zero.
std::vector<std::vector<long long>> build_mult_table(
    const std::vector<double>& level_values, const std::vector<double>& centers,
    int s, double dx, int acc_bits);

// table[t] = output level index for activation inputs in
// [x_origin + t*dx, x_origin + (t+1)*dx).
std::vector<int32_t> build_activation_index_table(const SnappedGrid& grid);

// Compiles a fully snapped net (homogeneous quantized hidden activations,
// Identity output layer) into a LutModel. Throws InvariantError listing
// offending parameters when the net is not snapped to the codebook.
LutModel compile_model(const DenseNet& net, const WeightCodebook& codebook,
                       const CompileOptions& options = {});

}  // namespace qfge
