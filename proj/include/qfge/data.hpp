#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qfge {

// In-memory dataset, row-major. Classification tasks fill `labels`,
// regression tasks fill `targets`.
struct Dataset {
    int input_dim = 0;
    int target_dim = 0;
    size_t count = 0;
    std::vector<double> inputs;   // count * input_dim
    std::vector<double> targets;  // count * target_dim, or empty
    std::vector<int> labels;      // count, or empty
};

// IDX readers (big-endian dims, magic 0x00000803 / 0x00000801).
// Pixels scale to [0,1]. Throws DataError with a byte offset on truncation.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Images only (labels left empty), same format checks.
Dataset load_idx_images(const std::string& images_path);

// IDX writers, used by the synthetic-data command and tests.
void save_idx_images(const std::string& path, const std::vector<uint8_t>& pixels,
                     int count, int rows, int cols);
void save_idx_labels(const std::string& path, const std::vector<uint8_t>& labels);

// n points (x, x^2), x uniform in [-1, 1].
Dataset gen_parabola(int n, uint64_t seed);

// n flattened 8x8 patches in [0,1] cut at random offsets from a source
// image dataset (e.g. MNIST-shaped images).
Dataset gen_patches(const Dataset& source, int n, uint64_t seed, int patch = 8);

// Procedurally rendered 28x28 digit images with random affine distortion,
// stroke width jitter, and pixel noise. A stand-in for MNIST when the real
// files are not on disk; same shapes, labels 0-9.
struct SynthDigits {
    std::vector<uint8_t> pixels;  // count * 28 * 28
    std::vector<uint8_t> labels;
};
SynthDigits gen_digits(int count, uint64_t seed);

// Dataset view of gen_digits output (pixels scaled to [0,1]).
Dataset synth_digit_dataset(int count, uint64_t seed);

}  // namespace qfge
