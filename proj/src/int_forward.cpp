#include "qfge/int_forward.hpp"

#include <algorithm>

namespace qfge {

int argmax_class(const std::vector<long long>& sums) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(sums.size()); ++i)
        if (sums[i] > sums[best]) best = i;
    return best;
}

IntTrace forward_int(const IntNetView& net, const std::vector<int32_t>& input_levels) {
    IntTrace trace;
    std::vector<int32_t> rows = input_levels;
    for (const IntLayerView& layer : net.layers) {
        const size_t units = layer.weight_idx.size();
        std::vector<long long> sums(units, 0);
        for (size_t u = 0; u < units; ++u) {
            const std::vector<int32_t>& widx = layer.weight_idx[u];
            long long acc = net.mult[net.bias_row][layer.bias_idx[u]];
            for (size_t i = 0; i < widx.size(); ++i)
                acc += net.mult[rows[i]][widx[i]];
            sums[u] = acc;
        }
        if (layer.has_activation) {
            std::vector<int32_t> next(units);
            for (size_t u = 0; u < units; ++u) {
                long long t = (sums[u] + net.pre_offset) >> net.shift;
                t = std::clamp<long long>(t, 0, net.table_len - 1);
                next[u] = net.act_table[static_cast<size_t>(t)];
            }
            trace.level_idx.push_back(next);
            rows = std::move(next);
        } else {
            trace.final_sums = std::move(sums);
        }
    }
    return trace;
}

}  // namespace qfge
