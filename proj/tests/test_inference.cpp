#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "qfge/errors.hpp"
#include "qfge/lut_compile.hpp"
#include "qfge/lut_infer.hpp"

using namespace qfge;

namespace {

DenseNet snapped_net(const std::vector<int>& dims, int levels,
                     const std::vector<double>& centers, uint64_t seed,
                     Head head = Head::SoftmaxCrossEntropy,
                     ActKind kind = ActKind::TanhD) {
    ActivationSpec act = build_activation(kind, levels);
    DenseNet net = make_net(dims, act, true, head, seed);
    std::mt19937_64 rng(seed * 31 + 7);
    std::uniform_int_distribution<size_t> pick(0, centers.size() - 1);
    for (auto& l : net.layers) {
        for (auto& w : l.w) w = centers[pick(rng)];
        for (auto& b : l.b) b = centers[pick(rng)];
    }
    return net;
}

WeightCodebook book(std::vector<double> centers) {
    WeightCodebook cb;
    cb.centers = std::move(centers);
    return cb;
}

}  // namespace

TEST_CASE("quantize_input examples") {
    ActivationSpec t32 = build_activation(ActKind::TanhD, 32);
    // pixel 0.5 -> floor(0.5*31 + 0.5) = 16
    CHECK(quantize_input({0.5}, t32) == std::vector<int32_t>{16});
    CHECK(quantize_input({0.0}, t32) == std::vector<int32_t>{0});
    CHECK(quantize_input({1.0}, t32) == std::vector<int32_t>{31});
    // out-of-range inputs clamp
    CHECK(quantize_input({-0.2, 1.7}, t32) == std::vector<int32_t>{0, 31});
    // half-up ties go to the higher index: 0.5/31 * 31 = 0.5 -> index 1
    CHECK(quantize_input({0.5 / 31.0}, t32) == std::vector<int32_t>{1});
    CHECK_THROWS_AS(quantize_input({std::nan("")}, t32), std::invalid_argument);
}

TEST_CASE("argmax_class ties to lowest index") {
    CHECK(argmax_class({3, 7, 7, 1}) == 1);
    CHECK(argmax_class({-5, -5}) == 0);
    CHECK(argmax_class({42}) == 0);
}

TEST_CASE("regression_value") {
    LutModel m;
    m.dx = 0.25;
    m.s = 10;
    CHECK(regression_value(m, 4096) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(regression_value(m, -2048) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(regression_value(m, 0) == 0.0);
}

TEST_CASE("zero network: all-zero weights give all-zero sums") {
    std::vector<double> centers{-0.5, 0.0, 0.5};
    DenseNet net = snapped_net({3, 4, 2}, 4, centers, 1);
    for (auto& l : net.layers) {
        for (auto& w : l.w) w = 0.0;
        for (auto& b : l.b) b = 0.0;
    }
    LutModel m = compile_model(net, book(centers));
    IntNetView view = make_int_view(m);
    IntTrace t = forward_int(view, {0, 2, 3});
    for (long long s : t.final_sums) CHECK(s == 0);
    // hidden units all land in the cell containing pre-activation 0
    long long cell = (0 + m.pre_offset) >> m.s;
    for (int32_t idx : t.level_idx[0]) CHECK(idx == m.act_table[cell]);
}

TEST_CASE("single hidden unit: exhaustive agreement over every input level") {
    std::vector<double> centers{-0.9, -0.4, -0.15, 0.0, 0.2, 0.5, 0.8};
    DenseNet net = snapped_net({1, 1, 1}, 16, centers, 3, Head::L2Regression);
    LutModel m = compile_model(net, book(centers));
    IntNetView view = make_int_view(m);
    for (int32_t lvl = 0; lvl < 16; ++lvl) {
        IntTrace it = forward_int(view, {lvl});
        RefTrace rt = reference_forward(m, {lvl});
        CHECK(it.level_idx[0][0] == rt.level_idx[0][0]);
        CHECK(regression_value(m, it.final_sums[0]) ==
              doctest::Approx(rt.outputs[0]).epsilon(1e-4));
    }
}

TEST_CASE("forward_int agrees with the reference oracle on random nets") {
    for (auto [kind, levels] :
         std::vector<std::pair<ActKind, int>>{{ActKind::TanhD, 16},
                                              {ActKind::ReLU6D, 8}}) {
        // generic centers: no subset of products can cancel to land a sum
        // exactly on a level boundary
        std::vector<double> centers{-0.731, -0.312, -0.054, 0.0131,
                                    0.117, 0.344, 0.762};
        DenseNet net =
            snapped_net({6, 12, 10, 3}, levels, centers, 5,
                        Head::SoftmaxCrossEntropy, kind);
        LutModel m = compile_model(net, book(centers));

        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const size_t count = 300;
        std::vector<double> raw(count * 6);
        for (auto& v : raw) v = u(rng);
        ConformanceReport rep = run_conformance(m, raw, count, 6);
        CHECK(rep.unit_comparisons == count * (12 + 10));
        CHECK(rep.unit_agreement() == 1.0);
        CHECK(rep.head_agreement() == 1.0);
        CHECK(rep.max_index_deviation == 0);
    }
}

TEST_CASE("integer sums track the real sums within the rounding budget") {
    std::vector<double> centers{-0.6, -0.2, 0.0, 0.25, 0.55};
    DenseNet net = snapped_net({4, 8, 2}, 8, centers, 9, Head::L2Regression);
    LutModel m = compile_model(net, book(centers));
    IntNetView view = make_int_view(m);
    double unit = m.dx / std::ldexp(1.0, m.s);

    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> lvl(0, 7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int32_t> in(4);
        for (auto& v : in) v = lvl(rng);
        IntTrace it = forward_int(view, in);
        RefTrace rt = reference_forward(m, in);
        REQUIRE(it.final_sums.size() == rt.outputs.size());
        bool hidden_match = true;
        for (size_t u = 0; u < it.level_idx[0].size(); ++u)
            if (it.level_idx[0][u] != rt.level_idx[0][u]) hidden_match = false;
        if (!hidden_match) continue;
        for (size_t o = 0; o < rt.outputs.size(); ++o)
            CHECK(std::abs(regression_value(m, it.final_sums[o]) - rt.outputs[o]) <=
                  (8 + 1) * 0.5 * unit + 1e-15);
    }
}

TEST_CASE("inference source contains no multiply and no float types") {
    std::ifstream f(std::string(QFGE_SOURCE_DIR) + "/src/int_forward.cpp");
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    std::string src = ss.str();
    CHECK(!src.empty());
    CHECK(src.find('*') == std::string::npos);
    CHECK(src.find("float") == std::string::npos);
    CHECK(src.find("double") == std::string::npos);
    // no division either, once include paths and comments are stripped
    std::istringstream lines(src);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("#include", 0) == 0) continue;
        size_t comment = line.find("//");
        if (comment != std::string::npos) line = line.substr(0, comment);
        CHECK(line.find('/') == std::string::npos);
    }
}
