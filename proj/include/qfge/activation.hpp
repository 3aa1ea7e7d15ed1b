#pragma once

#include <string>
#include <vector>

namespace qfge {

enum class ActKind { TanhD, ReLU6D, Identity };

std::string act_kind_name(ActKind kind);

// A quantized non-linearity: L equally spaced output levels of the underlying
// bounded function, plus the input-space boundaries separating adjacent levels.
struct ActivationSpec {
    ActKind kind = ActKind::Identity;
    int levels = 0;
    double gamma_min = 0.0;
    double gamma_max = 0.0;
    double step = 0.0;
    std::vector<double> level_values;  // size L, strictly increasing
    std::vector<double> boundaries;    // size L-1, strictly increasing
};

// Builds the spec for a bounded non-linearity with L >= 2 levels.
// Identity has no levels and is rejected.
ActivationSpec build_activation(ActKind kind, int levels);

// Identity placeholder used by linear output layers; never quantized.
ActivationSpec identity_spec();

struct QuantResult {
    int index;
    double value;
};

// Apply the underlying function, then round to the nearest level (half-up, so
// a value exactly on a boundary goes to the higher index).
QuantResult quantize_value(const ActivationSpec& spec, double x);

// The underlying continuous function (tanh / clamp(x,0,6) / x).
double underlying(ActKind kind, double x);

// Straight-through derivative: the underlying function's derivative,
// independent of the level count.
double derivative_underlying(const ActivationSpec& spec, double x);

// Result of snapping boundaries onto a uniform grid of pitch dx so that the
// inference engine can bin activation inputs by shift + table lookup.
// Every snapped boundary equals x_origin + m*dx for an integer m in [0, T].
struct SnappedGrid {
    double dx = 0.0;
    double x_origin = 0.0;
    int table_len = 0;
    ActivationSpec spec;  // boundaries replaced by their snapped positions
};

// Finds dx and x_origin for a table of length T, minimizing the maximum
// boundary displacement subject to snapped boundaries being distinct grid
// lines. Ties prefer grids containing x=0, then coarser dx.
// Throws InvariantError when no feasible grid exists.
SnappedGrid snap_boundaries(const ActivationSpec& spec, int table_len);

}  // namespace qfge
