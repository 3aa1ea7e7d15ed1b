#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qfge/codebook.hpp"
#include "qfge/huffman.hpp"
#include "qfge/lut_model.hpp"
#include "qfge/train.hpp"

namespace qfge {

enum class IndexEncoding : uint8_t { Raw = 0, Huffman = 1 };

// "QFGE" container: magic, version, kind, section table, CRC32 trailer.
// Little-endian throughout; load(save(m)) is bit-exact.

struct CheckpointFile {
    DenseNet net;
    std::optional<WeightCodebook> codebook;
};

std::vector<uint8_t> serialize_checkpoint(const DenseNet& net,
                                          const WeightCodebook* codebook);
CheckpointFile deserialize_checkpoint(const std::vector<uint8_t>& bytes);
void save_checkpoint(const std::string& path, const DenseNet& net,
                     const WeightCodebook* codebook);
CheckpointFile load_checkpoint(const std::string& path);

struct LutSectionSizes {
    uint64_t header_bytes = 0;
    uint64_t tables_bytes = 0;     // mult table
    uint64_t act_table_bytes = 0;  // activation index table
    uint64_t index_payload_bytes = 0;
    uint64_t index_payload_bits = 0;
    uint64_t total_bytes = 0;
};

std::vector<uint8_t> serialize_lut_model(const LutModel& model, IndexEncoding enc,
                                         LutSectionSizes* sizes = nullptr);
LutModel deserialize_lut_model(const std::vector<uint8_t>& bytes);
void save_lut_model(const std::string& path, const LutModel& model, IndexEncoding enc);
LutModel load_lut_model(const std::string& path);

// Which kind of model file a path holds.
enum class FileKind : uint8_t { Checkpoint = 0, LutModel = 1 };
FileKind peek_file_kind(const std::string& path);

struct StorageReport {
    size_t parameter_count = 0;
    uint64_t index_payload_bits = 0;
    double bits_per_index = 0.0;
    double empirical_entropy_bits = 0.0;
    uint64_t table_bytes = 0;
    uint64_t act_table_bytes = 0;
    uint64_t header_bytes = 0;
    uint64_t total_bytes = 0;      // exact serialized file size
    double ratio_vs_float32 = 0.0; // total_bytes / (4 bytes * parameter count)
};

StorageReport estimate_storage(const LutModel& model, IndexEncoding enc);

// Flat per-parameter index stream in serialization order
// (layer, unit, weights then bias).
std::vector<int32_t> flatten_weight_indices(const LutModel& model);

}  // namespace qfge
