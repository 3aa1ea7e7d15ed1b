#include "qfge/lut_infer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qfge {

IntNetView make_int_view(const LutModel& model) {
    IntNetView view;
    view.shift = model.s;
    view.pre_offset = model.pre_offset;
    view.table_len = model.table_len;
    view.bias_row = model.levels;
    view.mult = model.mult;
    view.act_table = model.act_table;
    for (const LutLayer& l : model.layers)
        view.layers.push_back({l.weight_idx, l.bias_idx, l.has_activation});
    return view;
}

std::vector<int32_t> quantize_input(const std::vector<double>& raw,
                                    const ActivationSpec& spec) {
    std::vector<int32_t> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        double v = raw[i];
        if (!std::isfinite(v))
            throw std::invalid_argument("quantize_input: non-finite input");
        int idx = static_cast<int>(std::floor(v * (spec.levels - 1) + 0.5));
        out[i] = static_cast<int32_t>(std::clamp(idx, 0, spec.levels - 1));
    }
    return out;
}

std::vector<int32_t> quantize_input(const LutModel& model,
                                    const std::vector<double>& raw) {
    ActivationSpec spec = build_activation(model.act_kind, model.levels);
    return quantize_input(raw, spec);
}

void map_inputs_to_act_range(Dataset& ds, const ActivationSpec& spec) {
    const bool autoenc = ds.targets == ds.inputs && !ds.inputs.empty();
    const double span = spec.gamma_max - spec.gamma_min;
    for (double& v : ds.inputs) v = spec.gamma_min + v * span;
    if (autoenc) ds.targets = ds.inputs;
}

void quantize_dataset_inputs(Dataset& ds, const ActivationSpec& spec) {
    const bool autoenc = ds.targets == ds.inputs && !ds.inputs.empty();
    for (double& v : ds.inputs) {
        int idx = static_cast<int>(std::floor(v * (spec.levels - 1) + 0.5));
        v = spec.level_values[std::clamp(idx, 0, spec.levels - 1)];
    }
    if (autoenc) ds.targets = ds.inputs;
}

RefTrace reference_forward(const LutModel& model,
                           const std::vector<int32_t>& input_levels) {
    RefTrace trace;
    std::vector<double> values(input_levels.size());
    for (size_t i = 0; i < input_levels.size(); ++i)
        values[i] = model.level_values[input_levels[i]];

    for (const LutLayer& layer : model.layers) {
        const size_t units = layer.bias_idx.size();
        std::vector<double> sums(units);
        for (size_t u = 0; u < units; ++u) {
            double acc = model.centers[layer.bias_idx[u]];
            const auto& widx = layer.weight_idx[u];
            for (size_t i = 0; i < widx.size(); ++i)
                acc += values[i] * model.centers[widx[i]];
            sums[u] = acc;
        }
        if (layer.has_activation) {
            std::vector<int32_t> idx(units);
            for (size_t u = 0; u < units; ++u) {
                int32_t j = 0;
                for (double b : model.snapped_boundaries)
                    if (b <= sums[u]) ++j;
                idx[u] = j;
            }
            trace.level_idx.push_back(idx);
            values.resize(units);
            for (size_t u = 0; u < units; ++u) values[u] = model.level_values[idx[u]];
        } else {
            trace.outputs = std::move(sums);
        }
    }
    return trace;
}

double regression_value(const LutModel& model, long long sum) {
    return static_cast<double>(sum) * model.dx / std::ldexp(1.0, model.s);
}

ConformanceReport run_conformance(const LutModel& model,
                                  const std::vector<double>& raw_inputs,
                                  size_t count, int input_dim) {
    IntNetView view = make_int_view(model);
    ConformanceReport rep;
    rep.inputs = count;
    std::vector<double> sample(input_dim);
    for (size_t n = 0; n < count; ++n) {
        std::copy_n(raw_inputs.data() + n * input_dim, input_dim, sample.data());
        std::vector<int32_t> levels = quantize_input(model, sample);
        IntTrace it = forward_int(view, levels);
        RefTrace rt = reference_forward(model, levels);
        for (size_t l = 0; l < it.level_idx.size(); ++l) {
            for (size_t u = 0; u < it.level_idx[l].size(); ++u) {
                ++rep.unit_comparisons;
                int dev = std::abs(it.level_idx[l][u] - rt.level_idx[l][u]);
                if (dev != 0) ++rep.unit_mismatches;
                rep.max_index_deviation = std::max(rep.max_index_deviation, dev);
            }
        }
        if (model.head == Head::SoftmaxCrossEntropy) {
            int ic = argmax_class(it.final_sums);
            int rc = 0;
            for (size_t o = 1; o < rt.outputs.size(); ++o)
                if (rt.outputs[o] > rt.outputs[rc]) rc = static_cast<int>(o);
            if (ic != rc) ++rep.head_mismatches;
        }
    }
    return rep;
}

}  // namespace qfge
