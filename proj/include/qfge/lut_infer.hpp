#pragma once

#include "qfge/int_forward.hpp"
#include "qfge/lut_model.hpp"

namespace qfge {

// Integer-only view over a LutModel (the model must outlive the view).
IntNetView make_int_view(const LutModel& model);

// Maps raw inputs in [0,1] affinely into the activation output range and
// rounds each to the nearest level index (ties to the higher index).
std::vector<int32_t> quantize_input(const std::vector<double>& raw,
                                    const ActivationSpec& spec);
std::vector<int32_t> quantize_input(const LutModel& model,
                                    const std::vector<double>& raw);

// Training-side counterparts of quantize_input, so float training sees the
// same input space the integer engine will. Both rewrite ds.inputs (and
// ds.targets when it aliases the inputs, i.e. autoencoders).
//
// map_inputs_to_act_range: affine [0,1] -> [gamma_min, gamma_max].
// quantize_dataset_inputs: additionally round to the nearest level value.
void map_inputs_to_act_range(Dataset& ds, const ActivationSpec& spec);
void quantize_dataset_inputs(Dataset& ds, const ActivationSpec& spec);

// Real-arithmetic conformance oracle: exact sums over level values and
// centers, binned against the snapped boundaries.
struct RefTrace {
    std::vector<std::vector<int32_t>> level_idx;
    std::vector<double> outputs;  // pre-activation outputs of the final layer
};
RefTrace reference_forward(const LutModel& model,
                           const std::vector<int32_t>& input_levels);

// Scaled regression readout: value = sum * dx / 2^s.
double regression_value(const LutModel& model, long long sum);

struct ConformanceReport {
    size_t unit_comparisons = 0;
    size_t unit_mismatches = 0;
    int max_index_deviation = 0;
    size_t inputs = 0;
    size_t head_mismatches = 0;  // argmax disagreements (classifier)
    double unit_agreement() const {
        return unit_comparisons == 0
                   ? 1.0
                   : 1.0 - double(unit_mismatches) / double(unit_comparisons);
    }
    double head_agreement() const {
        return inputs == 0 ? 1.0 : 1.0 - double(head_mismatches) / double(inputs);
    }
};

// Runs forward_int against reference_forward over a batch of raw inputs.
ConformanceReport run_conformance(const LutModel& model,
                                  const std::vector<double>& raw_inputs,
                                  size_t count, int input_dim);

}  // namespace qfge
