#include "mvpf/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mvpf/errors.hpp"

namespace mvpf {

namespace {
void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("checkpoint truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

float get_f32(std::istream& is) {
    const std::uint32_t bits = get_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write("MVPF", 4);
    put_u32(os, kCheckpointVersion);
    for (const auto& [id, p] : store.all()) {
        put_u32(os, static_cast<std::uint32_t>(id.size()));
        os.write(id.data(), static_cast<std::streamsize>(id.size()));
        const Shape& s = p.tensor.shape();
        put_u64(os, s.size());
        for (std::size_t d : s) put_u64(os, d);
        for (double v : p.tensor.values()) put_f32(os, static_cast<float>(v));
    }
    if (!os) throw IoError("write failed: " + path);
}

namespace {
template <typename OnRecord>
void walk_checkpoint(const std::string& path, OnRecord&& on_record) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MVPF", 4) != 0) throw IoError("bad checkpoint magic: " + path);
    const std::uint32_t version = get_u32(is);
    if (version != kCheckpointVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }
    while (true) {
        is.peek();
        if (is.eof()) break;
        const std::uint32_t name_len = get_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw IoError("checkpoint truncated");
        const std::uint64_t rank = get_u64(is);
        Shape shape(rank);
        std::uint64_t count = 1;
        for (std::uint64_t i = 0; i < rank; ++i) {
            shape[i] = static_cast<std::size_t>(get_u64(is));
            count *= shape[i];
        }
        std::vector<float> values(count);
        for (std::uint64_t i = 0; i < count; ++i) values[i] = get_f32(is);
        on_record(name, shape, values);
    }
}
}  // namespace

void load_checkpoint(const std::string& path, ParamStore& store) {
    std::size_t seen = 0;
    walk_checkpoint(path, [&](const std::string& name, const Shape& shape,
                              const std::vector<float>& values) {
        if (!store.has(name)) throw IoError("checkpoint param not in model: " + name);
        Param& p = store.at(name);
        if (p.tensor.shape() != shape) {
            throw IoError("checkpoint shape mismatch for " + name + ": file " + shape_str(shape) +
                          " vs model " + shape_str(p.tensor.shape()));
        }
        auto& dst = p.tensor.mutable_values();
        for (std::size_t i = 0; i < values.size(); ++i) dst[i] = static_cast<double>(values[i]);
        ++seen;
    });
    if (seen != store.size()) {
        throw IoError("checkpoint has " + std::to_string(seen) + " params, model expects " +
                      std::to_string(store.size()));
    }
}

std::map<std::string, std::vector<float>> read_checkpoint_raw(const std::string& path) {
    std::map<std::string, std::vector<float>> out;
    walk_checkpoint(path, [&](const std::string& name, const Shape&,
                              const std::vector<float>& values) { out[name] = values; });
    return out;
}

}  // namespace mvpf
