#include "qfge/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "qfge/errors.hpp"

namespace qfge {

int nearest_center(const std::vector<double>& centers, double value) {
    auto it = std::lower_bound(centers.begin(), centers.end(), value);
    if (it == centers.begin()) return 0;
    if (it == centers.end()) return static_cast<int>(centers.size()) - 1;
    int hi = static_cast<int>(it - centers.begin());
    int lo = hi - 1;
    // Tie (equidistant) resolves to the lower index.
    return (value - centers[lo] < centers[hi] - value) ? lo : (value - centers[lo] > centers[hi] - value) ? hi : lo;
}

WeightCodebook kmeans_1d(std::span<const double> values, int k, int max_iters,
                         const std::vector<double>* warm_start) {
    if (k < 1) throw std::invalid_argument("kmeans_1d: k must be >= 1");
    if (values.empty()) throw std::invalid_argument("kmeans_1d: empty values");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();

    size_t distinct = 1;
    for (size_t i = 1; i < n; ++i)
        if (sorted[i] != sorted[i - 1]) ++distinct;
    if (static_cast<size_t>(k) > distinct)
        throw InvariantError("kmeans_1d: k=" + std::to_string(k) +
                             " exceeds distinct value count " + std::to_string(distinct));

    std::vector<double> prefix(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];

    std::vector<double> centers;
    if (warm_start && static_cast<int>(warm_start->size()) == k) {
        centers = *warm_start;
        std::sort(centers.begin(), centers.end());
    } else {
        centers.resize(k);
        for (int c = 0; c < k; ++c)
            centers[c] = sorted[std::min(n - 1, static_cast<size_t>((c + 0.5) * n / k))];
    }

    // Cluster c owns sorted[range_begin[c], range_begin[c+1]).
    std::vector<size_t> range_begin(k + 1, 0), prev_begin;
    for (int iter = 0; iter < max_iters; ++iter) {
        range_begin[0] = 0;
        for (int c = 0; c + 1 < k; ++c) {
            double cut = 0.5 * (centers[c] + centers[c + 1]);
            // Values strictly above the midpoint move to the upper cluster;
            // equidistant values stay with the lower index.
            range_begin[c + 1] = std::upper_bound(sorted.begin() + range_begin[c],
                                                  sorted.end(), cut) -
                                 sorted.begin();
        }
        range_begin[k] = n;

        // Reseed any empty cluster at the worst-quantized value.
        for (int c = 0; c < k; ++c) {
            if (range_begin[c + 1] > range_begin[c]) continue;
            double worst_err = -1.0;
            size_t worst_i = 0;
            for (size_t i = 0; i < n; ++i) {
                double e = std::abs(sorted[i] - centers[nearest_center(centers, sorted[i])]);
                if (e > worst_err) { worst_err = e; worst_i = i; }
            }
            centers[c] = sorted[worst_i];
            std::sort(centers.begin(), centers.end());
            c = -1;  // recompute all ranges against the repaired centers
            range_begin[0] = 0;
            for (int d = 0; d + 1 < k; ++d) {
                double cut = 0.5 * (centers[d] + centers[d + 1]);
                range_begin[d + 1] = std::upper_bound(sorted.begin() + range_begin[d],
                                                      sorted.end(), cut) -
                                     sorted.begin();
            }
            range_begin[k] = n;
        }

        if (range_begin == prev_begin) break;
        prev_begin = range_begin;

        for (int c = 0; c < k; ++c) {
            size_t lo = range_begin[c], hi = range_begin[c + 1];
            if (hi > lo) centers[c] = (prefix[hi] - prefix[lo]) / (hi - lo);
        }
        std::sort(centers.begin(), centers.end());
    }

    WeightCodebook cb;
    cb.method = ClusterMethod::KMeans;
    cb.centers = std::move(centers);
    return cb;
}

std::vector<double> subsample(std::span<const double> values, double fraction,
                              uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("subsample: fraction must be in (0, 1]");
    const size_t n = values.size();
    const size_t m = static_cast<size_t>(std::ceil(fraction * static_cast<double>(n)));
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first m slots are the sample.
    for (size_t i = 0; i < m && i + 1 < n; ++i) {
        std::uniform_int_distribution<size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<double> out(m);
    for (size_t i = 0; i < m; ++i) out[i] = values[idx[i]];
    return out;
}

std::vector<double> laplacian_levels(int N) {
    if (N < 3 || N % 2 == 0)
        throw std::invalid_argument("laplacian_levels: N must be odd and >= 3");
    const int count = (N - 1) / 2;
    std::vector<double> levels;
    levels.reserve(count);
    double prev = 0.0;
    for (int i = 1; i <= count; ++i) {
        double arg = 1.0 - 2.0 * std::exp(prev) / N;
        if (!(arg > 0.0))
            throw InvariantError("laplacian_levels: recurrence infeasible at level " +
                                 std::to_string(i) + " of " + std::to_string(count) +
                                 " (" + std::to_string(i - 1) + " feasible)");
        double next = prev - std::log(arg);
        levels.push_back(next);
        prev = next;
    }
    return levels;
}

WeightCodebook fit_laplacian_codebook(std::span<const double> values, int N) {
    if (values.empty()) throw std::invalid_argument("fit_laplacian_codebook: empty values");
    std::vector<double> levels = laplacian_levels(N);
    const double l_max = levels.back();
    const double delta_max = levels.size() >= 2 ? levels.back() - levels[levels.size() - 2]
                                                : levels.back();

    double a = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double w_max = 0.0;
    for (double v : values) w_max = std::max(w_max, std::abs(v - a));

    if (w_max == 0.0)
        throw InvariantError("fit_laplacian_codebook: all values identical, no scale");

    double b = w_max / l_max;
    if (w_max < 0.5) {
        // Early training: push the outermost level outward.
        b += (0.5 / (1.0 - w_max)) * b * delta_max / l_max;
    } else if (w_max > 1.25) {
        // Late training: pull it slightly inward to keep the regularization.
        b -= 0.25 * b * delta_max / l_max;
    }

    WeightCodebook cb;
    cb.method = ClusterMethod::LaplacianL1;
    cb.mean_a = a;
    cb.scale_b = b;
    cb.centers.reserve(2 * levels.size() + 1);
    for (auto it = levels.rbegin(); it != levels.rend(); ++it)
        cb.centers.push_back(a - b * *it);
    cb.centers.push_back(a);
    for (double l : levels) cb.centers.push_back(a + b * l);
    return cb;
}

std::vector<int> assign_to_codebook(std::span<const double> values,
                                    const WeightCodebook& codebook) {
    std::vector<int> out(values.size());
    for (size_t i = 0; i < values.size(); ++i)
        out[i] = nearest_center(codebook.centers, values[i]);
    return out;
}

}  // namespace qfge
