#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qfge {

enum class ClusterMethod { KMeans, LaplacianL1 };

// The global set of |W| unique weight values shared by the whole network.
struct WeightCodebook {
    std::vector<double> centers;  // strictly increasing
    ClusterMethod method = ClusterMethod::KMeans;
    double mean_a = 0.0;   // LaplacianL1 only
    double scale_b = 0.0;  // LaplacianL1 only
};

// Lloyd's algorithm in 1-D. Initialization at the k evenly spaced quantiles
// of the values (deterministic); empty clusters are reseeded at the value
// with the largest quantization error. A warm start (previous centers)
// replaces the quantile initialization when given.
WeightCodebook kmeans_1d(std::span<const double> values, int k, int max_iters,
                         const std::vector<double>* warm_start = nullptr);

// Uniform sample without replacement of ceil(fraction*n) values.
std::vector<double> subsample(std::span<const double> values, double fraction,
                              uint64_t seed);

// Positive level ladder L_1..L_{(N-1)/2} of the L1-optimal Laplacian
// quantizer: L_0 = 0, L_i = L_{i-1} - ln(1 - 2*exp(L_{i-1})/N).
std::vector<double> laplacian_levels(int N);

// Closed-form codebook at a +/- b*L_i (plus the center a itself), with the
// early/late scale nudges keyed off W_max = max |value - a|.
WeightCodebook fit_laplacian_codebook(std::span<const double> values, int N);

// Nearest-center index per value; ties go to the lower index.
std::vector<int> assign_to_codebook(std::span<const double> values,
                                    const WeightCodebook& codebook);

int nearest_center(const std::vector<double>& centers, double value);

}  // namespace qfge
