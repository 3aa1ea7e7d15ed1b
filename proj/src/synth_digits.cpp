#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "qfge/data.hpp"

namespace qfge {

namespace {

struct P {
    double x, y;
};

using Stroke = std::vector<P>;  // polyline in [0,1]^2, y down

void arc(Stroke& s, double cx, double cy, double rx, double ry, double a0,
         double a1, int n = 10) {
    for (int i = 0; i <= n; ++i) {
        double a = a0 + (a1 - a0) * i / n;
        s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
}

std::vector<Stroke> digit_skeleton(int digit) {
    const double pi = 3.14159265358979323846;
    std::vector<Stroke> strokes;
    Stroke s;
    switch (digit) {
        case 0:
            arc(s, 0.5, 0.5, 0.30, 0.42, 0, 2 * pi, 16);
            strokes.push_back(s);
            break;
        case 1:
            strokes.push_back({{0.32, 0.28}, {0.55, 0.10}, {0.55, 0.90}});
            break;
        case 2:
            arc(s, 0.48, 0.30, 0.27, 0.22, -pi, 0.35 * pi, 10);
            s.push_back({0.25, 0.88});
            strokes.push_back(s);
            strokes.push_back({{0.25, 0.88}, {0.78, 0.88}});
            break;
        case 3:
            arc(s, 0.45, 0.28, 0.26, 0.20, -0.85 * pi, 0.5 * pi, 10);
            strokes.push_back(s);
            s.clear();
            arc(s, 0.45, 0.70, 0.29, 0.22, -0.5 * pi, 0.85 * pi, 10);
            strokes.push_back(s);
            break;
        case 4:
            strokes.push_back({{0.62, 0.10}, {0.22, 0.62}, {0.80, 0.62}});
            strokes.push_back({{0.62, 0.10}, {0.62, 0.90}});
            break;
        case 5:
            strokes.push_back({{0.72, 0.12}, {0.30, 0.12}, {0.28, 0.46}});
            s.clear();
            arc(s, 0.47, 0.66, 0.26, 0.23, -0.55 * pi, 0.80 * pi, 10);
            strokes.push_back(s);
            break;
        case 6:
            s.push_back({0.62, 0.10});
            arc(s, 0.47, 0.66, 0.24, 0.23, -0.75 * pi, 1.25 * pi, 14);
            strokes.push_back(s);
            break;
        case 7:
            strokes.push_back({{0.22, 0.12}, {0.78, 0.12}, {0.42, 0.90}});
            break;
        case 8:
            arc(s, 0.5, 0.30, 0.22, 0.19, 0, 2 * pi, 12);
            strokes.push_back(s);
            s.clear();
            arc(s, 0.5, 0.70, 0.26, 0.22, 0, 2 * pi, 12);
            strokes.push_back(s);
            break;
        case 9:
            arc(s, 0.52, 0.34, 0.23, 0.21, 0, 2 * pi, 12);
            strokes.push_back(s);
            strokes.push_back({{0.75, 0.34}, {0.68, 0.90}});
            break;
    }
    return strokes;
}

double seg_dist(P p, P a, P b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double wx = p.x - a.x, wy = p.y - a.y;
    double vv = vx * vx + vy * vy;
    double t = vv > 0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
    double dx = wx - t * vx, dy = wy - t * vy;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

SynthDigits gen_digits(int count, uint64_t seed) {
    const int side = 28;
    SynthDigits out;
    out.pixels.resize(size_t(count) * side * side);
    out.labels.resize(count);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_digit(0, 9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int img = 0; img < count; ++img) {
        int digit = pick_digit(rng);
        out.labels[img] = static_cast<uint8_t>(digit);
        std::vector<Stroke> strokes = digit_skeleton(digit);

        // Random affine distortion around the glyph center.
        double rot = 0.30 * gauss(rng);
        double shear = 0.22 * gauss(rng);
        double sx = 1.0 + 0.16 * gauss(rng);
        double sy = 1.0 + 0.16 * gauss(rng);
        double tx = 1.8 * gauss(rng), ty = 1.8 * gauss(rng);
        double cr = std::cos(rot), sr = std::sin(rot);
        double thick = std::clamp(1.15 + 0.45 * gauss(rng), 0.55, 2.4);
        double intensity = std::clamp(0.85 + 0.12 * gauss(rng), 0.55, 1.0);

        for (Stroke& s : strokes)
            for (P& p : s) {
                // jitter control points, then map unit square -> pixel box
                double ux = p.x - 0.5 + 0.02 * gauss(rng);
                double uy = p.y - 0.5 + 0.02 * gauss(rng);
                double rxp = sx * (cr * ux - sr * uy) + shear * uy;
                double ryp = sy * (sr * ux + cr * uy);
                p.x = 14.0 + 22.0 * rxp + tx;
                p.y = 14.0 + 22.0 * ryp + ty;
            }

        uint8_t* px = &out.pixels[size_t(img) * side * side];
        const double soft = 0.55;
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                P p{c + 0.5, r + 0.5};
                double d = 1e9;
                for (const Stroke& s : strokes)
                    for (size_t i = 0; i + 1 < s.size(); ++i)
                        d = std::min(d, seg_dist(p, s[i], s[i + 1]));
                double v = intensity * std::clamp((thick + soft - d) / (2 * soft), 0.0, 1.0);
                v += 0.09 * gauss(rng);
                px[r * side + c] = static_cast<uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
            }
        }
    }
    return out;
}

}  // namespace qfge
