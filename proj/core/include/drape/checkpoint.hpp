#pragma once

#include "drape/tensor_io.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace drape {

// Named tensors and text blobs. Entries are written in key order, so
// save -> load -> save reproduces the file byte for byte.
//
// Layout (little-endian): magic "DRCK", u32 version, u32 text count, then per
// text u32 key length, key, u32 value length, value; u32 tensor count, then
// per tensor u32 key length, key, DRT1 tensor.
struct Checkpoint {
    std::map<std::string, std::string> texts;
    std::map<std::string, Tensor> tensors;

    void put(const std::string& key, std::span<const double> values);
    void put_scalar(const std::string& key, double value);
    const Tensor& tensor(const std::string& key) const;
    // Copies a stored tensor into `out`, which must already have the right size.
    void get(const std::string& key, std::span<double> out) const;
    double scalar(const std::string& key) const;
    const std::string& text(const std::string& key) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drape
