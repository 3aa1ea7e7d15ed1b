#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "qfge/data.hpp"
#include "qfge/errors.hpp"

using namespace qfge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qfge_data_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("idx round trip") {
    TempDir tmp;
    const int count = 3, rows = 4, cols = 5;
    std::vector<uint8_t> pixels(count * rows * cols);
    std::iota(pixels.begin(), pixels.end(), uint8_t(0));
    std::vector<uint8_t> labels{7, 0, 9};
    save_idx_images(tmp.file("img"), pixels, count, rows, cols);
    save_idx_labels(tmp.file("lbl"), labels);

    Dataset d = load_mnist_idx(tmp.file("img"), tmp.file("lbl"));
    CHECK(d.count == 3);
    CHECK(d.input_dim == rows * cols);
    CHECK(d.target_dim == 10);  // class count for the softmax head
    CHECK(d.labels == std::vector<int>{7, 0, 9});
    // pixel value v maps to v/255 in [0,1]
    for (size_t i = 0; i < pixels.size(); ++i)
        CHECK(d.inputs[i] == doctest::Approx(pixels[i] / 255.0).epsilon(1e-12));
    CHECK(d.inputs[0] == 0.0);
    // byte 255 maps exactly to 1.0
    std::vector<uint8_t> white(1 * 2 * 2, 255);
    save_idx_images(tmp.file("w"), white, 1, 2, 2);
    save_idx_labels(tmp.file("wl"), {1});
    Dataset dw = load_mnist_idx(tmp.file("w"), tmp.file("wl"));
    CHECK(dw.inputs[0] == 1.0);
}

TEST_CASE("idx errors: bad magic, truncation, count mismatch") {
    TempDir tmp;
    std::vector<uint8_t> pixels(2 * 3 * 3, 100);
    save_idx_images(tmp.file("img"), pixels, 2, 3, 3);
    save_idx_labels(tmp.file("lbl"), {1, 2});

    // corrupt the magic
    {
        std::fstream f(tmp.file("img"),
                       std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(3);
        char c = 0x55;
        f.write(&c, 1);
    }
    CHECK_THROWS_AS(load_mnist_idx(tmp.file("img"), tmp.file("lbl")), DataError);

    // truncated image payload; message names the byte offset
    save_idx_images(tmp.file("img2"), pixels, 2, 3, 3);
    fs::resize_file(tmp.file("img2"), 16 + 10);
    try {
        load_mnist_idx(tmp.file("img2"), tmp.file("lbl"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }

    // image/label count mismatch
    save_idx_images(tmp.file("img3"), pixels, 2, 3, 3);
    save_idx_labels(tmp.file("lbl3"), {1, 2, 3});
    CHECK_THROWS_AS(load_mnist_idx(tmp.file("img3"), tmp.file("lbl3")), DataError);

    CHECK_THROWS_AS(load_mnist_idx(tmp.file("nonexistent"), tmp.file("lbl")),
                    DataError);
}

TEST_CASE("gen_parabola") {
    Dataset d = gen_parabola(200, 9);
    CHECK(d.count == 200);
    CHECK(d.input_dim == 1);
    CHECK(d.target_dim == 1);
    for (size_t i = 0; i < d.count; ++i) {
        double x = d.inputs[i];
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
        CHECK(d.targets[i] == doctest::Approx(x * x).epsilon(1e-12));
    }
    // deterministic in the seed
    Dataset d2 = gen_parabola(200, 9);
    CHECK(d.inputs == d2.inputs);
    Dataset d3 = gen_parabola(200, 10);
    CHECK(d.inputs != d3.inputs);
}

TEST_CASE("gen_patches") {
    Dataset src = synth_digit_dataset(20, 4);
    Dataset p = gen_patches(src, 50, 7);
    CHECK(p.count == 50);
    CHECK(p.input_dim == 64);
    CHECK(p.target_dim == 64);
    // autoencoder-style: target equals input, values stay in [0,1]
    CHECK(p.inputs == p.targets);
    for (double v : p.inputs) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    Dataset p2 = gen_patches(src, 50, 7);
    CHECK(p.inputs == p2.inputs);
}

TEST_CASE("synthetic digits") {
    SynthDigits s = gen_digits(100, 3);
    CHECK(s.pixels.size() == size_t(100) * 28 * 28);
    CHECK(s.labels.size() == 100);
    for (uint8_t l : s.labels) CHECK(l <= 9);
    // all ten classes appear in a batch of 100
    std::vector<int> hist(10, 0);
    for (uint8_t l : s.labels) hist[l]++;
    for (int c = 0; c < 10; ++c) CHECK(hist[c] > 0);
    // images are non-trivial: some ink, some background
    size_t ink = 0;
    for (uint8_t p : s.pixels)
        if (p > 128) ++ink;
    CHECK(ink > 100u * 20);
    CHECK(ink < s.pixels.size() / 2);

    SynthDigits s2 = gen_digits(100, 3);
    CHECK(s.pixels == s2.pixels);
    CHECK(s.labels == s2.labels);

    Dataset d = synth_digit_dataset(10, 1);
    CHECK(d.input_dim == 784);
    CHECK(d.count == 10);
    for (double v : d.inputs) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("synthetic digits survive an idx round trip") {
    TempDir tmp;
    SynthDigits s = gen_digits(5, 2);
    save_idx_images(tmp.file("img"), s.pixels, 5, 28, 28);
    save_idx_labels(tmp.file("lbl"), s.labels);
    Dataset d = load_mnist_idx(tmp.file("img"), tmp.file("lbl"));
    CHECK(d.count == 5);
    CHECK(d.input_dim == 784);
    for (int i = 0; i < 5; ++i) CHECK(d.labels[i] == s.labels[i]);
    for (size_t i = 0; i < s.pixels.size(); ++i)
        CHECK(d.inputs[i] == doctest::Approx(s.pixels[i] / 255.0).epsilon(1e-12));
}
