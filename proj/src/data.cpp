#include "qfge/data.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "qfge/errors.hpp"

namespace qfge {

namespace {

uint32_t read_be32(std::ifstream& f, const std::string& path, size_t& offset) {
    unsigned char buf[4];
    f.read(reinterpret_cast<char*>(buf), 4);
    if (f.gcount() != 4)
        throw DataError(path + ": truncated at byte " + std::to_string(offset));
    offset += 4;
    return (uint32_t(buf[0]) << 24) | (uint32_t(buf[1]) << 16) |
           (uint32_t(buf[2]) << 8) | uint32_t(buf[3]);
}

void write_be32(std::ofstream& f, uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<char*>(buf), 4);
}

}  // namespace

Dataset load_idx_images(const std::string& images_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError(images_path + ": cannot open");
    size_t off = 0;
    uint32_t magic = read_be32(img, images_path, off);
    if (magic != 0x00000803u)
        throw DataError(images_path + ": bad image magic 0x" + std::to_string(magic));
    uint32_t n = read_be32(img, images_path, off);
    uint32_t rows = read_be32(img, images_path, off);
    uint32_t cols = read_be32(img, images_path, off);
    size_t npix = size_t(n) * rows * cols;
    std::vector<unsigned char> raw(npix);
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(npix));
    if (static_cast<size_t>(img.gcount()) != npix)
        throw DataError(images_path + ": truncated at byte " +
                        std::to_string(off + static_cast<size_t>(img.gcount())));
    Dataset d;
    d.input_dim = static_cast<int>(rows * cols);
    d.target_dim = 10;
    d.count = n;
    d.inputs.resize(npix);
    for (size_t i = 0; i < npix; ++i) d.inputs[i] = raw[i] / 255.0;
    return d;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError(images_path + ": cannot open");
    size_t off = 0;
    uint32_t magic = read_be32(img, images_path, off);
    if (magic != 0x00000803u)
        throw DataError(images_path + ": bad image magic 0x" + std::to_string(magic));
    uint32_t n = read_be32(img, images_path, off);
    uint32_t rows = read_be32(img, images_path, off);
    uint32_t cols = read_be32(img, images_path, off);
    size_t npix = size_t(n) * rows * cols;
    std::vector<unsigned char> raw(npix);
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(npix));
    if (static_cast<size_t>(img.gcount()) != npix)
        throw DataError(images_path + ": truncated at byte " +
                        std::to_string(off + static_cast<size_t>(img.gcount())));

    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw DataError(labels_path + ": cannot open");
    size_t loff = 0;
    uint32_t lmagic = read_be32(lbl, labels_path, loff);
    if (lmagic != 0x00000801u)
        throw DataError(labels_path + ": bad label magic 0x" + std::to_string(lmagic));
    uint32_t ln = read_be32(lbl, labels_path, loff);
    if (ln != n)
        throw DataError(labels_path + ": label count " + std::to_string(ln) +
                        " != image count " + std::to_string(n));
    std::vector<unsigned char> lraw(ln);
    lbl.read(reinterpret_cast<char*>(lraw.data()), ln);
    if (static_cast<size_t>(lbl.gcount()) != ln)
        throw DataError(labels_path + ": truncated at byte " +
                        std::to_string(loff + static_cast<size_t>(lbl.gcount())));

    Dataset d;
    d.input_dim = static_cast<int>(rows * cols);
    d.target_dim = 10;
    d.count = n;
    d.inputs.resize(npix);
    for (size_t i = 0; i < npix; ++i) d.inputs[i] = raw[i] / 255.0;
    d.labels.assign(lraw.begin(), lraw.end());
    return d;
}

void save_idx_images(const std::string& path, const std::vector<uint8_t>& pixels,
                     int count, int rows, int cols) {
    if (pixels.size() != size_t(count) * rows * cols)
        throw std::invalid_argument("save_idx_images: size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open for writing");
    write_be32(f, 0x00000803u);
    write_be32(f, static_cast<uint32_t>(count));
    write_be32(f, static_cast<uint32_t>(rows));
    write_be32(f, static_cast<uint32_t>(cols));
    f.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void save_idx_labels(const std::string& path, const std::vector<uint8_t>& labels) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open for writing");
    write_be32(f, 0x00000801u);
    write_be32(f, static_cast<uint32_t>(labels.size()));
    f.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

Dataset gen_parabola(int n, uint64_t seed) {
    Dataset d;
    d.input_dim = 1;
    d.target_dim = 1;
    d.count = n;
    d.inputs.resize(n);
    d.targets.resize(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < n; ++i) {
        double x = u(rng);
        d.inputs[i] = x;
        d.targets[i] = x * x;
    }
    return d;
}

Dataset gen_patches(const Dataset& source, int n, uint64_t seed, int patch) {
    if (source.count == 0) throw DataError("gen_patches: empty source");
    // Source images are assumed square.
    int side = 1;
    while (side * side < source.input_dim) ++side;
    if (side * side != source.input_dim)
        throw DataError("gen_patches: source images are not square");
    if (patch > side) throw std::invalid_argument("gen_patches: patch larger than image");

    Dataset d;
    d.input_dim = patch * patch;
    d.target_dim = patch * patch;
    d.count = n;
    d.inputs.resize(size_t(n) * patch * patch);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick_img(0, source.count - 1);
    std::uniform_int_distribution<int> pick_off(0, side - patch);
    for (int i = 0; i < n; ++i) {
        size_t img = pick_img(rng);
        int r0 = pick_off(rng), c0 = pick_off(rng);
        const double* src = &source.inputs[img * source.input_dim];
        double* dst = &d.inputs[size_t(i) * patch * patch];
        for (int r = 0; r < patch; ++r)
            for (int c = 0; c < patch; ++c)
                dst[r * patch + c] = src[(r0 + r) * side + (c0 + c)];
    }
    d.targets = d.inputs;  // auto-encoding
    return d;
}

Dataset synth_digit_dataset(int count, uint64_t seed) {
    SynthDigits s = gen_digits(count, seed);
    Dataset d;
    d.input_dim = 28 * 28;
    d.target_dim = 10;
    d.count = count;
    d.inputs.resize(s.pixels.size());
    for (size_t i = 0; i < s.pixels.size(); ++i) d.inputs[i] = s.pixels[i] / 255.0;
    d.labels.assign(s.labels.begin(), s.labels.end());
    return d;
}

}  // namespace qfge
