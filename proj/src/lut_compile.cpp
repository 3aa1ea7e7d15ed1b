#include "qfge/lut_compile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qfge/errors.hpp"

namespace qfge {

namespace {

long long round_half_away(double v) {
    return llround(v);  // llround rounds halves away from zero
}

}  // namespace

int choose_scale(int fan_in_max, double max_product, double dx, int acc_bits,
                 int guard_bits) {
    if (acc_bits != 32 && acc_bits != 64)
        throw std::invalid_argument("choose_scale: acc_bits must be 32 or 64");
    const int floor_s =
        static_cast<int>(std::ceil(std::log2(double(fan_in_max) + 1.0))) + guard_bits;
    const long double limit = std::pow(2.0L, acc_bits - 1);
    auto fits = [&](int s) {
        long double entry =
            std::floor(std::abs(max_product) * std::pow(2.0L, s) / dx + 0.5L);
        return (long double)(fan_in_max + 1) * entry < limit;
    };
    if (!fits(floor_s))
        throw InvariantError(
            "choose_scale: no feasible scale; s floor " + std::to_string(floor_s) +
            " overflows " + std::to_string(acc_bits) +
            "-bit accumulators (use larger acc_bits or a smaller network)");
    int s = floor_s;
    while (s + 1 < acc_bits && fits(s + 1)) ++s;
    return s;
}

std::vector<std::vector<long long>> build_mult_table(
    const std::vector<double>& level_values, const std::vector<double>& centers,
    int s, double dx, int acc_bits) {
    const double scale = std::ldexp(1.0, s) / dx;
    const long double limit = std::pow(2.0L, acc_bits - 1);
    std::vector<double> rows = level_values;
    rows.push_back(1.0);  // bias row
    std::vector<std::vector<long long>> table(rows.size(),
                                              std::vector<long long>(centers.size()));
    for (size_t j = 0; j < rows.size(); ++j)
        for (size_t k = 0; k < centers.size(); ++k) {
            double v = rows[j] * centers[k] * scale;
            if (std::abs((long double)v) >= limit)
                throw InvariantError("build_mult_table: entry overflows accumulator width");
            table[j][k] = round_half_away(v);
        }
    return table;
}

std::vector<int32_t> build_activation_index_table(const SnappedGrid& grid) {
    const auto& b = grid.spec.boundaries;
    std::vector<int32_t> table(grid.table_len);
    for (int t = 0; t < grid.table_len; ++t) {
        // level = number of snapped boundaries at grid index <= t
        int32_t level = 0;
        for (double bj : b) {
            long long m = llround((bj - grid.x_origin) / grid.dx);
            if (m <= t) ++level;
        }
        table[t] = level;
    }
    for (size_t t = 1; t < table.size(); ++t)
        if (table[t] < table[t - 1])
            throw InvariantError("build_activation_index_table: non-monotone table");
    return table;
}

LutModel compile_model(const DenseNet& net, const WeightCodebook& codebook,
                       const CompileOptions& options) {
    if (net.layers.empty()) throw std::invalid_argument("compile_model: empty net");
    if (codebook.centers.empty())
        throw InvariantError("compile_model: no codebook (float baseline nets cannot be compiled)");

    // Homogeneous quantized hidden activations, Identity output.
    const DenseLayer& out_layer = net.layers.back();
    if (out_layer.act.kind != ActKind::Identity)
        throw InvariantError("compile_model: output layer must be Identity");
    const ActivationSpec* hidden = nullptr;
    for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
        const DenseLayer& layer = net.layers[l];
        if (layer.act.kind == ActKind::Identity || !layer.quantize)
            throw InvariantError("compile_model: hidden layer " + std::to_string(l) +
                                 " is not a quantized bounded activation");
        if (!hidden) {
            hidden = &layer.act;
        } else if (layer.act.kind != hidden->kind || layer.act.levels != hidden->levels) {
            throw InvariantError("compile_model: mixed hidden activation kinds are not supported");
        }
    }
    if (!hidden)
        throw InvariantError("compile_model: need at least one hidden layer");

    // Every parameter must already be a codebook center, bit-exactly.
    const std::vector<double>& centers = codebook.centers;
    auto index_of = [&](double v) -> int {
        int idx = nearest_center(centers, v);
        return centers[idx] == v ? idx : -1;
    };
    std::string offenders;
    int offender_count = 0;
    auto check = [&](double v, size_t layer, const char* what, size_t i) {
        if (index_of(v) >= 0) return;
        ++offender_count;
        if (offender_count <= 5)
            offenders += " layer" + std::to_string(layer) + "." + what + "[" +
                         std::to_string(i) + "]=" + std::to_string(v);
    };
    for (size_t l = 0; l < net.layers.size(); ++l) {
        for (size_t i = 0; i < net.layers[l].w.size(); ++i)
            check(net.layers[l].w[i], l, "w", i);
        for (size_t i = 0; i < net.layers[l].b.size(); ++i)
            check(net.layers[l].b[i], l, "b", i);
    }
    if (offender_count > 0)
        throw InvariantError("compile_model: " + std::to_string(offender_count) +
                             " parameters are not snapped to the codebook:" + offenders);

    LutModel m;
    m.acc_bits = options.acc_bits;
    m.act_kind = hidden->kind;
    m.levels = hidden->levels;
    m.level_values = hidden->level_values;
    m.centers = centers;
    m.head = net.head;

    int table_len = options.table_len > 0 ? options.table_len : 4 * (hidden->levels - 1);
    SnappedGrid grid = snap_boundaries(*hidden, table_len);
    // Sums outside the table clamp to the edge cells, so no boundary may sit
    // on the first grid line or past the last cell; pad the table if needed.
    while (llround((grid.spec.boundaries.front() - grid.x_origin) / grid.dx) < 1) {
        grid.x_origin -= grid.dx;
        ++grid.table_len;
    }
    while (llround((grid.spec.boundaries.back() - grid.x_origin) / grid.dx) >
           grid.table_len - 1)
        ++grid.table_len;
    m.dx = grid.dx;
    m.x_origin = grid.x_origin;
    m.table_len = grid.table_len;
    m.snapped_boundaries = grid.spec.boundaries;
    m.act_table = build_activation_index_table(grid);

    int fan_in_max = 0;
    for (const DenseLayer& l : net.layers) fan_in_max = std::max(fan_in_max, l.in_dim);
    double max_center = 0.0;
    for (double c : centers) max_center = std::max(max_center, std::abs(c));
    double max_level = 1.0;  // bias activation
    for (double v : m.level_values) max_level = std::max(max_level, std::abs(v));

    m.s = choose_scale(fan_in_max, max_level * max_center, m.dx, options.acc_bits,
                       options.guard_bits);
    const int floor_s =
        static_cast<int>(std::ceil(std::log2(double(fan_in_max) + 1.0))) +
        options.guard_bits;
    // choose_scale bounds the accumulated products alone; the pre-shift
    // offset also rides on each sum, so back off until the full path fits.
    const long double limit = std::pow(2.0L, options.acc_bits - 1);
    while (true) {
        m.mult = build_mult_table(m.level_values, centers, m.s, m.dx, options.acc_bits);
        m.pre_offset = round_half_away(-m.x_origin * std::ldexp(1.0, m.s) / m.dx);
        long long max_entry = 0;
        for (const auto& row : m.mult)
            for (long long e : row) max_entry = std::max(max_entry, std::abs(e));
        long double bound = (long double)(fan_in_max + 1) * max_entry +
                            std::abs((long double)m.pre_offset);
        if (bound < limit) break;
        if (m.s <= floor_s)
            throw InvariantError(
                "compile_model: no scale meets both the precision floor and the "
                "accumulator overflow bound (use larger acc_bits)");
        --m.s;
    }

    for (const DenseLayer& l : net.layers) {
        LutLayer lut;
        lut.fan_in = l.in_dim;
        lut.has_activation = l.act.kind != ActKind::Identity;
        lut.weight_idx.resize(l.out_dim);
        lut.bias_idx.resize(l.out_dim);
        for (int o = 0; o < l.out_dim; ++o) {
            lut.weight_idx[o].resize(l.in_dim);
            for (int i = 0; i < l.in_dim; ++i)
                lut.weight_idx[o][i] =
                    static_cast<int32_t>(index_of(l.w[size_t(o) * l.in_dim + i]));
            lut.bias_idx[o] = static_cast<int32_t>(index_of(l.b[o]));
        }
        m.layers.push_back(std::move(lut));
    }

    // Full-path overflow bound, pre-shift offset included.
    long long max_entry = 0;
    for (const auto& row : m.mult)
        for (long long e : row) max_entry = std::max(max_entry, std::abs(e));
    long double bound = (long double)(fan_in_max + 1) * max_entry +
                        std::abs((long double)m.pre_offset);
    if (bound >= std::pow(2.0L, options.acc_bits - 1))
        throw InvariantError("compile_model: overflow bound violated after table build");

    return m;
}

}  // namespace qfge
