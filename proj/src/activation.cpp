#include "qfge/activation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qfge/errors.hpp"

namespace qfge {

std::string act_kind_name(ActKind kind) {
    switch (kind) {
        case ActKind::TanhD: return "tanhd";
        case ActKind::ReLU6D: return "relu6d";
        case ActKind::Identity: return "identity";
    }
    return "?";
}

double underlying(ActKind kind, double x) {
    switch (kind) {
        case ActKind::TanhD: return std::tanh(x);
        case ActKind::ReLU6D: return std::clamp(x, 0.0, 6.0);
        case ActKind::Identity: return x;
    }
    return x;
}

ActivationSpec build_activation(ActKind kind, int levels) {
    if (kind == ActKind::Identity)
        throw std::invalid_argument("build_activation: Identity has no levels");
    if (levels < 2)
        throw std::invalid_argument("build_activation: need at least 2 levels");

    ActivationSpec spec;
    spec.kind = kind;
    spec.levels = levels;
    if (kind == ActKind::TanhD) {
        spec.gamma_min = -1.0;
        spec.gamma_max = 1.0;
    } else {
        spec.gamma_min = 0.0;
        spec.gamma_max = 6.0;
    }
    spec.step = (spec.gamma_max - spec.gamma_min) / (levels - 1);
    spec.level_values.resize(levels);
    for (int j = 0; j < levels; ++j)
        spec.level_values[j] = spec.gamma_min + j * spec.step;
    spec.level_values.front() = spec.gamma_min;
    spec.level_values.back() = spec.gamma_max;

    // Input-space boundary = preimage of the output midpoint between adjacent
    // levels. For ReLU6 the underlying function is the identity on [0,6], so
    // the boundaries come out uniformly spaced at pitch 6/(L-1).
    spec.boundaries.resize(levels - 1);
    for (int j = 0; j + 1 < levels; ++j) {
        double mid = 0.5 * (spec.level_values[j] + spec.level_values[j + 1]);
        spec.boundaries[j] = (kind == ActKind::TanhD) ? std::atanh(mid) : mid;
    }
    return spec;
}

ActivationSpec identity_spec() {
    ActivationSpec spec;
    spec.kind = ActKind::Identity;
    return spec;
}

QuantResult quantize_value(const ActivationSpec& spec, double x) {
    if (spec.kind == ActKind::Identity)
        throw std::invalid_argument("quantize_value: Identity is not quantized");
    double y = underlying(spec.kind, x);
    int idx = static_cast<int>(std::floor((y - spec.gamma_min) / spec.step + 0.5));
    idx = std::clamp(idx, 0, spec.levels - 1);
    return {idx, spec.level_values[idx]};
}

double derivative_underlying(const ActivationSpec& spec, double x) {
    switch (spec.kind) {
        case ActKind::TanhD: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActKind::ReLU6D:
            return (x > 0.0 && x < 6.0) ? 1.0 : 0.0;
        case ActKind::Identity:
            return 1.0;
    }
    return 1.0;
}

namespace {

struct SnapCandidate {
    double disp = std::numeric_limits<double>::infinity();
    bool zero_on_grid = false;
    double dx = 0.0;
    double phase = 0.0;          // grid = { phase + m*dx }
    std::vector<long long> pos;  // grid index of each boundary (pre-shift)
    long long origin_index = 0;  // x_origin = phase + origin_index*dx
};

// Evaluates one (dx, phase) grid; returns false when boundaries collide or the
// table cannot cover them.
bool try_grid(const std::vector<double>& b, int T, double dx, double phase,
              SnapCandidate& out) {
    const int n = static_cast<int>(b.size());
    std::vector<long long> pos(n);
    double disp = 0.0;
    for (int j = 0; j < n; ++j) {
        pos[j] = std::llround((b[j] - phase) / dx);
        disp = std::max(disp, std::abs(b[j] - (phase + pos[j] * dx)));
        if (j > 0 && pos[j] <= pos[j - 1]) return false;
    }
    if (pos.back() - pos.front() > T) return false;
    // x_origin = phase + k*dx must put every boundary index in [0, T] and
    // cover the exact boundary range.
    long long k_hi = std::min<long long>(
        pos.front(), static_cast<long long>(std::floor((b.front() - phase) / dx + 1e-9)));
    long long k_lo = std::max<long long>(
        pos.back() - T,
        static_cast<long long>(std::ceil((b.back() - phase) / dx - 1e-9)) - T);
    if (k_lo > k_hi) return false;
    out.disp = disp;
    out.dx = dx;
    out.phase = phase;
    out.pos = std::move(pos);
    out.origin_index = (k_lo + k_hi) / 2;
    // 0 is a grid line when phase is an integer multiple of dx.
    double r = std::remainder(phase, dx);
    out.zero_on_grid = std::abs(r) < 1e-9 * dx;
    return true;
}

bool better(const SnapCandidate& a, const SnapCandidate& b) {
    const double tol = 1e-12;
    if (a.disp < b.disp - tol) return true;
    if (a.disp > b.disp + tol) return false;
    if (a.zero_on_grid != b.zero_on_grid) return a.zero_on_grid;
    return a.dx > b.dx + tol;
}

}  // namespace

SnappedGrid snap_boundaries(const ActivationSpec& spec, int table_len) {
    if (spec.kind == ActKind::Identity)
        throw std::invalid_argument("snap_boundaries: Identity has no boundaries");
    const int T = table_len;
    if (T < spec.levels)
        throw std::invalid_argument("snap_boundaries: table_len must be >= levels");
    const std::vector<double>& b = spec.boundaries;

    SnapCandidate best;
    auto consider = [&](double dx, double phase) {
        if (!(dx > 0.0) || !std::isfinite(dx)) return;
        SnapCandidate c;
        if (try_grid(b, T, dx, phase, c) && better(c, best)) best = c;
    };
    auto consider_phases = [&](double dx) {
        consider(dx, 0.0);
        for (double bj : b) consider(dx, std::remainder(bj, dx));
        for (int p = 1; p < 32; ++p) consider(dx, dx * p / 32.0);
    };

    if (b.size() == 1) {
        // Single boundary: any grid through it is exact. Pick a pitch of the
        // boundary magnitude scale so the table brackets it comfortably.
        double scale = std::max(std::abs(b[0]), 1.0);
        consider_phases(scale);
        consider_phases(scale / 2);
    } else {
        double span = b.back() - b.front();
        // Grids commensurate with the boundary span, coarsest first.
        for (int m = 1; m <= T; ++m) consider_phases(span / m);
        // Fine sweep between the coverage floor and the span.
        for (int q = 1; q <= 400; ++q)
            consider_phases(span / T + (span - span / T) * q / 401.0);
    }

    if (!std::isfinite(best.disp))
        throw InvariantError("snap_boundaries: no feasible grid keeps snapped boundaries distinct for table_len=" +
                             std::to_string(T));

    SnappedGrid grid;
    grid.dx = best.dx;
    grid.x_origin = best.phase + best.origin_index * best.dx;
    grid.table_len = T;
    grid.spec = spec;
    for (size_t j = 0; j < b.size(); ++j)
        grid.spec.boundaries[j] = best.phase + best.pos[j] * best.dx;
    return grid;
}

}  // namespace qfge
