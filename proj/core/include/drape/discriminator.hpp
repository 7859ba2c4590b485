#pragma once

#include "drape/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace drape {

// 32x32 RGB patch -> real-score logit. Three 4x4 stride-2 pad-1 convolutions
// (3 -> 16 -> 32 -> 1 channels, leaky ReLU 0.2 after the first two); the
// logit is the mean of the final 4x4 map.
class PatchDiscriminator {
public:
    static constexpr int kPatch = 32;
    static constexpr double kLeak = 0.2;

    PatchDiscriminator() = default;
    explicit PatchDiscriminator(std::uint64_t seed);

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    struct Cache {
        std::vector<double> input;  // 3 x 32 x 32, channel-major
        std::vector<double> act1;   // 16 x 16 x 16, post-activation
        std::vector<double> act2;   // 32 x 8 x 8, post-activation
    };

    double forward(const Image& patch, Cache* cache = nullptr) const;
    // Accumulates parameter gradients into `grad_params` (may be empty to
    // skip) and returns dL/d(patch).
    Image backward(const Cache& cache, double grad_logit, std::span<double> grad_params) const;

    static std::size_t parameter_count();

private:
    std::vector<double> params_;
};

// Copies the kPatch x kPatch window whose top-left corner is (x, y).
Image extract_patch(const Image& image, int x, int y);
// Adds a patch gradient back into a full-image gradient.
void scatter_patch(Image& grad_image, const Image& grad_patch, int x, int y);

}  // namespace drape
