#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "qfge/codebook.hpp"
#include "qfge/errors.hpp"

using namespace qfge;

namespace {

// Optimal 1-D k-quantizer of a sample by dynamic programming (exact L2).
std::vector<double> dp_optimal_centers(std::vector<double> v, int k) {
    std::sort(v.begin(), v.end());
    const int n = static_cast<int>(v.size());
    std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        pre[i + 1] = pre[i] + v[i];
        pre2[i + 1] = pre2[i] + v[i] * v[i];
    }
    auto cost = [&](int lo, int hi) {  // [lo, hi)
        double s = pre[hi] - pre[lo], s2 = pre2[hi] - pre2[lo];
        int c = hi - lo;
        return s2 - s * s / c;
    };
    const double inf = 1e300;
    std::vector<std::vector<double>> best(k + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<int>> cut(k + 1, std::vector<int>(n + 1, 0));
    best[0][0] = 0.0;
    for (int c = 1; c <= k; ++c)
        for (int i = c; i <= n; ++i)
            for (int j = c - 1; j < i; ++j) {
                double b = best[c - 1][j] + cost(j, i);
                if (b < best[c][i]) {
                    best[c][i] = b;
                    cut[c][i] = j;
                }
            }
    std::vector<double> centers(k);
    int i = n;
    for (int c = k; c >= 1; --c) {
        int j = cut[c][i];
        centers[c - 1] = (pre[i] - pre[j]) / (i - j);
        i = j;
    }
    return centers;
}

double wcss(const std::vector<double>& v, const std::vector<double>& centers) {
    double e = 0.0;
    for (double x : v) {
        double d = x - centers[nearest_center(centers, x)];
        e += d * d;
    }
    return e;
}

}  // namespace

TEST_CASE("kmeans_1d point masses") {
    std::vector<double> v{-1, -1, 1, 1};
    auto cb = kmeans_1d(v, 2, 20);
    CHECK(cb.centers == std::vector<double>{-1.0, 1.0});

    std::vector<double> v2{0, 0, 0, 10};
    auto cb2 = kmeans_1d(v2, 2, 20);
    CHECK(cb2.centers == std::vector<double>{0.0, 10.0});
}

TEST_CASE("kmeans_1d matches DP optimum on a normal sample") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(2000);
    for (auto& x : v) x = g(rng);
    auto cb = kmeans_1d(v, 3, 100);
    auto opt = dp_optimal_centers(v, 3);
    for (int c = 0; c < 3; ++c)
        CHECK(cb.centers[c] == doctest::Approx(opt[c]).epsilon(0.1));
    // Lloyd-Max centers for a standard normal: approximately {-1.224, 0, 1.224}
    CHECK(std::abs(cb.centers[0] + 1.224) < 0.1);
    CHECK(std::abs(cb.centers[1]) < 0.1);
    CHECK(std::abs(cb.centers[2] - 1.224) < 0.1);
}

TEST_CASE("kmeans_1d never worsens the quantile init") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(500);
    for (auto& x : v) x = g(rng);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    int k = 8;
    std::vector<double> init(k);
    for (int c = 0; c < k; ++c)
        init[c] = sorted[std::min<size_t>(sorted.size() - 1, size_t((c + 0.5) * sorted.size() / k))];
    auto cb = kmeans_1d(v, k, 50);
    CHECK(wcss(v, cb.centers) <= wcss(v, init) + 1e-9);
    // objective is monotone under additional iterations
    auto cb1 = kmeans_1d(v, k, 1);
    auto cb2 = kmeans_1d(v, k, 2);
    CHECK(wcss(v, cb2.centers) <= wcss(v, cb1.centers) + 1e-9);
}

TEST_CASE("kmeans_1d rejects k above distinct count") {
    std::vector<double> v{1, 1, 1, 2};
    CHECK_THROWS_AS(kmeans_1d(v, 3, 10), InvariantError);
}

TEST_CASE("subsample") {
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 0.0);
    auto full = subsample(v, 1.0, 123);
    CHECK(full.size() == 1000);
    auto sorted = full;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);  // a permutation of the input

    CHECK(subsample(v, 0.02, 1).size() == 20);
    CHECK(subsample(v, 0.02, 99) == subsample(v, 0.02, 99));
    CHECK(subsample(v, 0.02, 1) != subsample(v, 0.02, 2));
}

TEST_CASE("laplacian_levels against the closed form") {
    // The recurrence telescopes to L_i = ln(N / (N - 2i)).
    for (int N : {5, 101, 1001}) {
        auto levels = laplacian_levels(N);
        CHECK(levels.size() == size_t((N - 1) / 2));
        for (size_t i = 0; i < levels.size(); ++i)
            CHECK(levels[i] ==
                  doctest::Approx(std::log(double(N) / (N - 2.0 * (i + 1)))).epsilon(1e-9));
        // strictly increasing levels, strictly increasing spacing
        double prev = 0.0, prev_delta = 0.0;
        for (double l : levels) {
            CHECK(l > prev);
            CHECK(l - prev > prev_delta);
            prev_delta = l - prev;
            prev = l;
        }
    }
    CHECK(laplacian_levels(1001)[0] == doctest::Approx(0.0020000).epsilon(1e-4));
    CHECK_THROWS_AS(laplacian_levels(4), std::invalid_argument);
    CHECK_THROWS_AS(laplacian_levels(1), std::invalid_argument);
}

TEST_CASE("fit_laplacian_codebook symmetry and pinning") {
    std::vector<double> sym;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        double x = g(rng);
        sym.push_back(x);
        sym.push_back(-x);
    }
    auto cb = fit_laplacian_codebook(sym, 11);
    CHECK(cb.mean_a == doctest::Approx(0.0).epsilon(1e-12));
    size_t n = cb.centers.size();
    REQUIRE(n == 11);
    for (size_t i = 0; i < n; ++i)
        CHECK(cb.centers[i] == doctest::Approx(-cb.centers[n - 1 - i]).epsilon(1e-9));

    // W_max exactly 1.0: no nudge, outermost centers at a +/- 1.
    std::vector<double> v{-1.0, -0.5, 0.0, 0.5, 1.0};
    auto cb2 = fit_laplacian_codebook(v, 5);
    CHECK(cb2.centers.front() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cb2.centers.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_laplacian_codebook nudges") {
    auto levels = laplacian_levels(5);
    double lmax = levels.back();
    double dmax = levels.back() - levels[levels.size() - 2];

    // W_max = 0.25 < 0.5: outermost level moves outward by b*dmax/(2*(1-wmax))
    std::vector<double> tight{-0.25, -0.1, 0.0, 0.1, 0.25};
    auto cb = fit_laplacian_codebook(tight, 5);
    double b0 = 0.25 / lmax;
    double expect = 0.25 + (0.5 / (1.0 - 0.25)) * b0 * dmax;
    CHECK(cb.centers.back() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(cb.centers.back() > 0.25);

    // W_max = 2 > 1.25: outermost level moves inward by b*dmax/4
    std::vector<double> wide{-2.0, -1.0, 0.0, 1.0, 2.0};
    auto cb2 = fit_laplacian_codebook(wide, 5);
    double b1 = 2.0 / lmax;
    CHECK(cb2.centers.back() == doctest::Approx(2.0 - 0.25 * b1 * dmax).epsilon(1e-12));
    CHECK(cb2.centers.back() < 2.0);

    // No-nudge regime (0.5 <= W_max <= 1.25) never pushes a snapped weight
    // past the extreme deviation W_max.
    std::vector<double> mid{-1.0, -0.3, 0.2, 0.4, 1.0};
    auto cb3 = fit_laplacian_codebook(mid, 7);
    double wmax = 0.0;
    for (double v : mid) wmax = std::max(wmax, std::abs(v - cb3.mean_a));
    for (double v : mid) {
        double snapped = cb3.centers[nearest_center(cb3.centers, v)];
        CHECK(std::abs(snapped - cb3.mean_a) <= wmax + 1e-12);
    }
}

TEST_CASE("assign_to_codebook") {
    WeightCodebook cb;
    cb.centers = {-1.0, 0.0, 2.0};
    std::vector<double> v{-1.0, -5.0, 0.9, 1.0, 3.0};
    auto a = assign_to_codebook(v, cb);
    CHECK(a == std::vector<int>{0, 0, 1, 1, 2});  // 1.0 equidistant -> lower index
}

TEST_CASE("assign_to_codebook matches exhaustive scan") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> centers(16);
    for (auto& c : centers) c = g(rng);
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
    WeightCodebook cb;
    cb.centers = centers;
    std::vector<double> v(2000);
    for (auto& x : v) x = 2.0 * g(rng);
    auto fast = assign_to_codebook(v, cb);
    for (size_t i = 0; i < v.size(); ++i) {
        int best = 0;
        for (size_t c = 1; c < centers.size(); ++c)
            if (std::abs(v[i] - centers[c]) < std::abs(v[i] - centers[best]))
                best = static_cast<int>(c);
        CHECK(fast[i] == best);
    }
}

TEST_CASE("snap idempotence") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<double> v(3000);
    for (auto& x : v) x = g(rng);
    auto cb = kmeans_1d(v, 16, 50);
    auto a1 = assign_to_codebook(v, cb);
    std::vector<double> snapped(v.size());
    for (size_t i = 0; i < v.size(); ++i) snapped[i] = cb.centers[a1[i]];
    auto a2 = assign_to_codebook(snapped, cb);
    CHECK(a1 == a2);
    for (size_t i = 0; i < v.size(); ++i) CHECK(snapped[i] == cb.centers[a2[i]]);
    // at most |W| distinct values survive
    std::sort(snapped.begin(), snapped.end());
    snapped.erase(std::unique(snapped.begin(), snapped.end()), snapped.end());
    CHECK(snapped.size() <= 16);
}
