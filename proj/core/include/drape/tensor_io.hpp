#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace drape {

// Dense float64 tensor of rank <= 3. Unused trailing dimensions are 1.
//
// On-disk layout (little-endian):
//   bytes 0..3   magic "DRT1"
//   bytes 4..15  three uint32 dimensions d0, d1, d2
//   then d0*d1*d2 IEEE-754 binary64 values, row-major (d2 fastest)
struct Tensor {
    std::array<std::uint32_t, 3> shape{0, 1, 1};
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::uint32_t d0, std::uint32_t d1 = 1, std::uint32_t d2 = 1);
    Tensor(std::array<std::uint32_t, 3> shape, std::vector<double> values);

    std::size_t element_count() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }
};

inline constexpr std::array<char, 4> kTensorMagic{'D', 'R', 'T', '1'};

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

// Little-endian scalar helpers shared by the container formats.
void write_u32(std::ostream& out, std::uint32_t v);
void write_f64(std::ostream& out, double v);
std::uint32_t read_u32(std::istream& in);
double read_f64(std::istream& in);

}  // namespace drape
