#include "drape/tensor_io.hpp"

#include "drape/core.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace drape {

Tensor::Tensor(std::uint32_t d0, std::uint32_t d1, std::uint32_t d2)
    : shape{d0, d1, d2}, data(static_cast<std::size_t>(d0) * d1 * d2, 0.0) {}

Tensor::Tensor(std::array<std::uint32_t, 3> s, std::vector<double> values)
    : shape(s), data(std::move(values)) {
    if (data.size() != element_count()) {
        throw ValidationError("tensor data length does not match its shape");
    }
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated container");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated container");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

void write_tensor(std::ostream& out, const Tensor& t) {
    if (t.data.size() != t.element_count()) {
        throw ValidationError("tensor data length does not match its shape");
    }
    out.write(kTensorMagic.data(), 4);
    for (auto d : t.shape) write_u32(out, d);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    } else {
        for (double v : t.data) write_f64(out, v);
    }
}

Tensor read_tensor(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4)) throw std::runtime_error("truncated tensor header");
    if (std::memcmp(magic, kTensorMagic.data(), 4) != 0) {
        throw std::runtime_error("bad tensor magic");
    }
    Tensor t;
    for (auto& d : t.shape) d = read_u32(in);
    t.data.resize(t.element_count());
    if constexpr (std::endian::native == std::endian::little) {
        if (!in.read(reinterpret_cast<char*>(t.data.data()),
                     static_cast<std::streamsize>(t.data.size() * sizeof(double)))) {
            throw std::runtime_error("truncated tensor payload");
        }
    } else {
        for (double& v : t.data) v = read_f64(in);
    }
    return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    write_tensor(out, t);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    try {
        return read_tensor(in);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace drape
