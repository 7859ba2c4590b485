#include "drape/checkpoint.hpp"

#include "drape/core.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace drape {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw std::runtime_error("truncated checkpoint string");
    return s;
}

}  // namespace

void Checkpoint::put(const std::string& key, std::span<const double> values) {
    tensors[key] = Tensor({static_cast<std::uint32_t>(values.size()), 1, 1},
                          std::vector<double>(values.begin(), values.end()));
}

void Checkpoint::put_scalar(const std::string& key, double value) { put(key, std::span<const double>(&value, 1)); }

const Tensor& Checkpoint::tensor(const std::string& key) const {
    const auto it = tensors.find(key);
    if (it == tensors.end()) throw ValidationError("checkpoint has no tensor '" + key + "'");
    return it->second;
}

void Checkpoint::get(const std::string& key, std::span<double> out) const {
    const Tensor& t = tensor(key);
    if (t.data.size() != out.size()) {
        throw ValidationError("checkpoint tensor '" + key + "' has " + std::to_string(t.data.size()) +
                              " values, expected " + std::to_string(out.size()));
    }
    std::copy(t.data.begin(), t.data.end(), out.begin());
}

double Checkpoint::scalar(const std::string& key) const {
    const Tensor& t = tensor(key);
    if (t.data.size() != 1) throw ValidationError("checkpoint entry '" + key + "' is not a scalar");
    return t.data[0];
}

const std::string& Checkpoint::text(const std::string& key) const {
    const auto it = texts.find(key);
    if (it == texts.end()) throw ValidationError("checkpoint has no text '" + key + "'");
    return it->second;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(ck.texts.size()));
    for (const auto& [k, v] : ck.texts) {
        write_string(out, k);
        write_string(out, v);
    }
    write_u32(out, static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& [k, t] : ck.tensors) {
        write_string(out, k);
        write_tensor(out, t);
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4)) {
        throw ValidationError("not a checkpoint (bad magic)");
    }
    if (read_u32(in) != kVersion) throw ValidationError("unsupported checkpoint version");
    Checkpoint ck;
    const std::uint32_t texts = read_u32(in);
    for (std::uint32_t i = 0; i < texts; ++i) {
        std::string k = read_string(in);
        ck.texts[k] = read_string(in);
    }
    const std::uint32_t tensors = read_u32(in);
    for (std::uint32_t i = 0; i < tensors; ++i) {
        std::string k = read_string(in);
        ck.tensors[k] = read_tensor(in);
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        write_checkpoint(out, ck);
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace drape
