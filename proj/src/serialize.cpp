#include "qfge/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "qfge/bitstream.hpp"
#include "qfge/errors.hpp"

namespace qfge {

namespace {

constexpr char kMagic[4] = {'Q', 'F', 'G', 'E'};
constexpr uint16_t kVersion = 1;

struct Writer {
    std::vector<uint8_t> buf;
    void u8(uint8_t v) { buf.push_back(v); }
    void u16(uint16_t v) { for (int i = 0; i < 2; ++i) buf.push_back(uint8_t(v >> (8 * i))); }
    void u32(uint32_t v) { for (int i = 0; i < 4; ++i) buf.push_back(uint8_t(v >> (8 * i))); }
    void u64(uint64_t v) { for (int i = 0; i < 8; ++i) buf.push_back(uint8_t(v >> (8 * i))); }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void bytes(const std::vector<uint8_t>& b) { buf.insert(buf.end(), b.begin(), b.end()); }
};

struct Reader {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;
    void need(size_t n) const {
        if (pos + n > buf.size())
            throw DataError("model file: truncated at byte " + std::to_string(pos));
    }
    uint8_t u8() { need(1); return buf[pos++]; }
    uint16_t u16() { need(2); uint16_t v = 0; for (int i = 0; i < 2; ++i) v |= uint16_t(buf[pos++]) << (8 * i); return v; }
    uint32_t u32() { need(4); uint32_t v = 0; for (int i = 0; i < 4; ++i) v |= uint32_t(buf[pos++]) << (8 * i); return v; }
    uint64_t u64() { need(8); uint64_t v = 0; for (int i = 0; i < 8; ++i) v |= uint64_t(buf[pos++]) << (8 * i); return v; }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<uint8_t> bytes(size_t n) {
        need(n);
        std::vector<uint8_t> out(buf.begin() + pos, buf.begin() + pos + n);
        pos += n;
        return out;
    }
};

// Assembles: magic, version, kind, section table, sections, CRC32 trailer.
std::vector<uint8_t> assemble(FileKind kind,
                              const std::vector<std::pair<uint32_t, std::vector<uint8_t>>>& sections) {
    Writer w;
    w.buf.insert(w.buf.end(), kMagic, kMagic + 4);
    w.u16(kVersion);
    w.u8(static_cast<uint8_t>(kind));
    w.u8(0);
    w.u32(static_cast<uint32_t>(sections.size()));
    uint64_t offset = w.buf.size() + sections.size() * 20;
    for (const auto& [id, body] : sections) {
        w.u32(id);
        w.u64(offset);
        w.u64(body.size());
        offset += body.size();
    }
    for (const auto& [id, body] : sections) w.bytes(body);
    uint32_t crc = crc32(0L, w.buf.data(), static_cast<uInt>(w.buf.size()));
    w.u32(crc);
    return std::move(w.buf);
}

// Verifies magic/version/CRC and returns the payload reader placed after the
// section table, plus the declared kind.
FileKind open_container(const std::vector<uint8_t>& bytes, Reader& r) {
    if (bytes.size() < 12 + 4) throw DataError("model file: too short");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw DataError("model file: unknown magic");
    uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i)
        stored_crc |= uint32_t(bytes[bytes.size() - 4 + i]) << (8 * i);
    uint32_t crc = crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4));
    if (crc != stored_crc) throw DataError("model file: checksum mismatch");
    r.pos = 4;
    uint16_t version = r.u16();
    if (version != kVersion)
        throw DataError("model file: unknown version " + std::to_string(version));
    FileKind kind = static_cast<FileKind>(r.u8());
    r.u8();
    uint32_t n_sections = r.u32();
    r.pos += size_t(n_sections) * 20;  // bodies follow in order
    return kind;
}

void write_f64s(Writer& w, const std::vector<double>& v) {
    w.u32(static_cast<uint32_t>(v.size()));
    for (double x : v) w.f64(x);
}

std::vector<double> read_f64s(Reader& r) {
    uint32_t n = r.u32();
    std::vector<double> v(n);
    for (auto& x : v) x = r.f64();
    return v;
}

void read_file(const std::string& path, std::vector<uint8_t>& bytes) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open");
    f.seekg(0, std::ios::end);
    bytes.resize(static_cast<size_t>(f.tellg()));
    f.seekg(0);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::vector<uint8_t> serialize_checkpoint(const DenseNet& net,
                                          const WeightCodebook* codebook) {
    Writer meta;
    meta.u8(static_cast<uint8_t>(net.head));
    meta.u32(static_cast<uint32_t>(net.layers.size()));

    Writer layers;
    for (const DenseLayer& l : net.layers) {
        layers.u32(static_cast<uint32_t>(l.in_dim));
        layers.u32(static_cast<uint32_t>(l.out_dim));
        layers.u8(static_cast<uint8_t>(l.act.kind));
        layers.u32(static_cast<uint32_t>(l.act.levels));
        layers.u8(l.quantize ? 1 : 0);
        for (double w : l.w) layers.f64(w);
        for (double b : l.b) layers.f64(b);
    }

    Writer cb;
    cb.u8(codebook ? 1 : 0);
    if (codebook) {
        cb.u8(static_cast<uint8_t>(codebook->method));
        cb.f64(codebook->mean_a);
        cb.f64(codebook->scale_b);
        write_f64s(cb, codebook->centers);
    }

    return assemble(FileKind::Checkpoint,
                    {{0, meta.buf}, {1, layers.buf}, {2, cb.buf}});
}

CheckpointFile deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    if (open_container(bytes, r) != FileKind::Checkpoint)
        throw DataError("model file: not a checkpoint");
    CheckpointFile out;
    out.net.head = static_cast<Head>(r.u8());
    uint32_t n_layers = r.u32();
    for (uint32_t i = 0; i < n_layers; ++i) {
        DenseLayer l;
        l.in_dim = static_cast<int>(r.u32());
        l.out_dim = static_cast<int>(r.u32());
        ActKind kind = static_cast<ActKind>(r.u8());
        int levels = static_cast<int>(r.u32());
        l.quantize = r.u8() != 0;
        l.act = (kind == ActKind::Identity) ? identity_spec()
                                            : build_activation(kind, levels);
        l.w.resize(size_t(l.in_dim) * l.out_dim);
        l.b.resize(l.out_dim);
        for (auto& w : l.w) w = r.f64();
        for (auto& b : l.b) b = r.f64();
        out.net.layers.push_back(std::move(l));
    }
    if (r.u8()) {
        WeightCodebook cb;
        cb.method = static_cast<ClusterMethod>(r.u8());
        cb.mean_a = r.f64();
        cb.scale_b = r.f64();
        cb.centers = read_f64s(r);
        out.codebook = std::move(cb);
    }
    return out;
}

void save_checkpoint(const std::string& path, const DenseNet& net,
                     const WeightCodebook* codebook) {
    write_file(path, serialize_checkpoint(net, codebook));
}

CheckpointFile load_checkpoint(const std::string& path) {
    std::vector<uint8_t> bytes;
    read_file(path, bytes);
    return deserialize_checkpoint(bytes);
}

std::vector<int32_t> flatten_weight_indices(const LutModel& model) {
    std::vector<int32_t> out;
    out.reserve(model.parameter_count());
    for (const LutLayer& l : model.layers)
        for (size_t u = 0; u < l.bias_idx.size(); ++u) {
            out.insert(out.end(), l.weight_idx[u].begin(), l.weight_idx[u].end());
            out.push_back(l.bias_idx[u]);
        }
    return out;
}

std::vector<uint8_t> serialize_lut_model(const LutModel& model, IndexEncoding enc,
                                         LutSectionSizes* sizes) {
    Writer header;
    header.u8(static_cast<uint8_t>(model.acc_bits));
    header.u32(static_cast<uint32_t>(model.s));
    header.u8(static_cast<uint8_t>(model.act_kind));
    header.u32(static_cast<uint32_t>(model.levels));
    header.u8(static_cast<uint8_t>(model.head));
    header.f64(model.dx);
    header.f64(model.x_origin);
    header.u32(static_cast<uint32_t>(model.table_len));
    header.i64(model.pre_offset);
    write_f64s(header, model.level_values);
    write_f64s(header, model.snapped_boundaries);
    write_f64s(header, model.centers);
    header.u32(static_cast<uint32_t>(model.layers.size()));
    for (const LutLayer& l : model.layers) {
        header.u32(static_cast<uint32_t>(l.fan_in));
        header.u32(static_cast<uint32_t>(l.bias_idx.size()));
        header.u8(l.has_activation ? 1 : 0);
    }

    // Mult entries are packed at the narrowest signed byte width that holds
    // every entry; small-scale models shrink their dominant section this way.
    Writer mult;
    int entry_width = 1;
    for (const auto& row : model.mult)
        for (long long e : row)
            while (entry_width < 8 &&
                   (e < -(1ll << (8 * entry_width - 1)) ||
                    e >= (1ll << (8 * entry_width - 1))))
                ++entry_width;
    mult.u8(static_cast<uint8_t>(entry_width));
    for (const auto& row : model.mult)
        for (long long e : row) {
            uint64_t u = static_cast<uint64_t>(e);
            for (int i = 0; i < entry_width; ++i) mult.u8(uint8_t(u >> (8 * i)));
        }

    Writer act;
    for (int32_t t : model.act_table) act.u16(static_cast<uint16_t>(t));

    Writer widx;
    std::vector<int32_t> flat = flatten_weight_indices(model);
    const int num_symbols = static_cast<int>(model.centers.size());
    widx.u8(static_cast<uint8_t>(enc));
    widx.u64(flat.size());
    uint64_t payload_bits = 0;
    if (enc == IndexEncoding::Raw) {
        int width = 1;
        while ((1u << width) < static_cast<unsigned>(num_symbols)) ++width;
        widx.u8(static_cast<uint8_t>(width));
        BitWriter bw;
        for (int32_t i : flat) bw.put(static_cast<uint64_t>(i), width);
        widx.u64(bw.bit_count());
        widx.bytes(bw.bytes());
        payload_bits = bw.bit_count();
    } else {
        HuffmanEncoded henc = entropy_encode_indices(flat, num_symbols);
        widx.u32(static_cast<uint32_t>(henc.lengths.size()));
        widx.bytes(henc.lengths);
        widx.u64(henc.bit_count);
        widx.bytes(henc.payload);
        payload_bits = henc.bit_count;
    }

    std::vector<uint8_t> file = assemble(
        FileKind::LutModel,
        {{0, header.buf}, {1, mult.buf}, {2, act.buf}, {3, widx.buf}});
    if (sizes) {
        sizes->header_bytes = file.size() - mult.buf.size() - act.buf.size() - widx.buf.size();
        sizes->tables_bytes = mult.buf.size();
        sizes->act_table_bytes = act.buf.size();
        sizes->index_payload_bytes = widx.buf.size();
        sizes->index_payload_bits = payload_bits;
        sizes->total_bytes = file.size();
    }
    return file;
}

LutModel deserialize_lut_model(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    if (open_container(bytes, r) != FileKind::LutModel)
        throw DataError("model file: not a compiled model");
    LutModel m;
    m.acc_bits = r.u8();
    m.s = static_cast<int>(r.u32());
    m.act_kind = static_cast<ActKind>(r.u8());
    m.levels = static_cast<int>(r.u32());
    m.head = static_cast<Head>(r.u8());
    m.dx = r.f64();
    m.x_origin = r.f64();
    m.table_len = static_cast<int>(r.u32());
    m.pre_offset = r.i64();
    m.level_values = read_f64s(r);
    m.snapped_boundaries = read_f64s(r);
    m.centers = read_f64s(r);
    uint32_t n_layers = r.u32();
    std::vector<std::pair<uint32_t, uint32_t>> shapes;  // fan_in, units
    for (uint32_t i = 0; i < n_layers; ++i) {
        LutLayer l;
        l.fan_in = static_cast<int>(r.u32());
        uint32_t units = r.u32();
        l.has_activation = r.u8() != 0;
        l.bias_idx.resize(units);
        l.weight_idx.assign(units, std::vector<int32_t>(l.fan_in));
        m.layers.push_back(std::move(l));
    }

    m.mult.assign(m.levels + 1, std::vector<long long>(m.centers.size()));
    {
        int entry_width = r.u8();
        if (entry_width < 1 || entry_width > 8)
            throw DataError("model file: bad mult entry width");
        for (auto& row : m.mult)
            for (auto& e : row) {
                uint64_t u = 0;
                for (int i = 0; i < entry_width; ++i)
                    u |= uint64_t(r.u8()) << (8 * i);
                // sign-extend from entry_width bytes
                int shift = 64 - 8 * entry_width;
                e = static_cast<long long>(static_cast<int64_t>(u << shift) >> shift);
            }
    }

    m.act_table.resize(m.table_len);
    for (auto& t : m.act_table) t = r.u16();

    IndexEncoding enc = static_cast<IndexEncoding>(r.u8());
    uint64_t n_indices = r.u64();
    std::vector<int32_t> flat;
    if (enc == IndexEncoding::Raw) {
        int width = r.u8();
        uint64_t bit_count = r.u64();
        if (bit_count != n_indices * static_cast<uint64_t>(width))
            throw DataError("model file: raw index bit count mismatch");
        std::vector<uint8_t> payload = r.bytes((bit_count + 7) / 8);
        BitReader br(payload.data(), payload.size());
        flat.resize(n_indices);
        for (auto& i : flat) i = static_cast<int32_t>(br.get(width));
    } else {
        HuffmanEncoded henc;
        uint32_t n_syms = r.u32();
        henc.lengths = r.bytes(n_syms);
        henc.bit_count = r.u64();
        henc.symbol_count = n_indices;
        henc.payload = r.bytes((henc.bit_count + 7) / 8);
        flat = entropy_decode_indices(henc);
    }

    size_t pos = 0;
    for (LutLayer& l : m.layers)
        for (size_t u = 0; u < l.bias_idx.size(); ++u) {
            for (int i = 0; i < l.fan_in; ++i) l.weight_idx[u][i] = flat.at(pos++);
            l.bias_idx[u] = flat.at(pos++);
        }
    if (pos != flat.size()) throw DataError("model file: index payload size mismatch");
    return m;
}

void save_lut_model(const std::string& path, const LutModel& model, IndexEncoding enc) {
    write_file(path, serialize_lut_model(model, enc));
}

LutModel load_lut_model(const std::string& path) {
    std::vector<uint8_t> bytes;
    read_file(path, bytes);
    return deserialize_lut_model(bytes);
}

FileKind peek_file_kind(const std::string& path) {
    std::vector<uint8_t> bytes;
    read_file(path, bytes);
    Reader r{bytes};
    return open_container(bytes, r);
}

StorageReport estimate_storage(const LutModel& model, IndexEncoding enc) {
    LutSectionSizes sizes;
    std::vector<uint8_t> file = serialize_lut_model(model, enc, &sizes);
    std::vector<int32_t> flat = flatten_weight_indices(model);

    StorageReport rep;
    rep.parameter_count = flat.size();
    rep.index_payload_bits = sizes.index_payload_bits;
    rep.bits_per_index = flat.empty() ? 0.0
                                      : double(sizes.index_payload_bits) / double(flat.size());
    rep.empirical_entropy_bits =
        empirical_entropy_bits(flat, static_cast<int>(model.centers.size()));
    rep.table_bytes = sizes.tables_bytes;
    rep.act_table_bytes = sizes.act_table_bytes;
    rep.header_bytes = sizes.header_bytes;
    rep.total_bytes = sizes.total_bytes;
    rep.ratio_vs_float32 =
        rep.parameter_count ? double(rep.total_bytes) / (4.0 * double(rep.parameter_count))
                            : 0.0;
    return rep;
}

}  // namespace qfge
