#pragma once

#include "drape/core.hpp"
#include "drape/renderer.hpp"
#include "drape/skeleton.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace drape {

// Raw texel layout shared by branch fields, offsets and composed maps.
inline constexpr int kRawChannels = 14;
inline constexpr int kRawPosition = 0;  // 3
inline constexpr int kRawRotation = 3;  // 4, (w,x,y,z)
inline constexpr int kRawScale = 7;     // 3, log-scale
inline constexpr int kRawOpacity = 10;  // 1, logit
inline constexpr int kRawColor = 11;    // 3, logits

// Half-widths of the tanh-bounded offsets.
struct OffsetRanges {
    double position = 0.05;
    double rotation = 0.2;
    double scale = 0.5;
    double color = 0.25;

    void validate() const;
};

// UV grid with kRawChannels values per texel.
struct RawGrid {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    RawGrid() = default;
    RawGrid(int h, int w);
    std::size_t texel_count() const { return static_cast<std::size_t>(height) * width; }
    double* texel(std::size_t i) { return data.data() + i * kRawChannels; }
    const double* texel(std::size_t i) const { return data.data() + i * kRawChannels; }
    bool empty() const { return data.empty(); }
};

enum class Branch { src, tar };
const char* branch_name(Branch b);

// View-pose-invariant raw map of one branch.
struct BranchField {
    Branch branch = Branch::src;
    RawGrid raw;
    std::vector<std::uint8_t> valid;

    // p = 0, q = identity, log-scale = log(scale), opacity logit and color
    // logits as given, on every valid texel of `layout`; invalid texels zero.
    static BranchField initial(Branch branch, const PositionMap& layout, double scale,
                               double opacity, const Vec3& color);
    void validate() const;
};

// Shared pose/view-conditioned offset network. Input per texel: posed
// position (3), view direction (3), texel uv (2), learned embedding; two tanh
// hidden layers; kRawChannels outputs. The output layer starts at zero.
class OffsetNetwork {
public:
    static constexpr int kFixedInputs = 8;

    OffsetNetwork() = default;
    OffsetNetwork(int uv_height, int uv_width, int hidden, int embedding, std::uint64_t seed);

    int hidden() const { return hidden_; }
    int embedding() const { return embedding_; }
    int input_size() const { return kFixedInputs + embedding_; }
    int uv_height() const { return uv_height_; }
    int uv_width() const { return uv_width_; }

    // Flat parameter vector: embeddings (texel-major), W1, b1, W2, b2, W3, b3.
    // Matrices are column-major with shape (out, in).
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    struct Cache {
        std::vector<int> texels;
        Eigen::MatrixXd input;   // in x N
        Eigen::MatrixXd hidden1; // H x N, post-activation
        Eigen::MatrixXd hidden2; // H x N, post-activation
    };

    // Raw offsets for every valid texel of `posed`; invalid texels stay zero.
    // Throws on non-finite input or a non-unit view.
    RawGrid forward(const PositionMap& posed, const Vec3& view, Cache* cache = nullptr) const;
    // Accumulates dL/dparams into `grad` (same length as parameters()).
    void backward(const Cache& cache, const RawGrid& grad_offsets, std::span<double> grad) const;

private:
    struct Layout {
        std::size_t embed, w1, b1, w2, b2, w3, b3, total;
    };
    Layout layout() const;
    Eigen::MatrixXd matrix(std::size_t offset, int rows, int cols) const;

    int uv_height_ = 0;
    int uv_width_ = 0;
    int hidden_ = 0;
    int embedding_ = 0;
    std::vector<double> params_;
};

// Canonical-space avatar: one primitive per valid texel (suppressed texels
// carry opacity 0), plus the composed raw map used by the regularizer.
struct ComposedAvatar {
    std::vector<GaussianPrimitive> primitives;
    std::vector<int> texel;
    // Per texel: p + r_p tanh(dp), q + r_q tanh(dq), s + r_s tanh(ds),
    // a + tanh(da) and c + r_c tanh(dc). Invalid texels are zero.
    RawGrid composed;
};

// position = template + p + r_p tanh(dp)
// rotation = normalize(q + r_q tanh(dq))
// scale    = exp(s + r_s tanh(ds))
// opacity  = clamp(sigmoid(a) + tanh(da), 0, 1)
// color    = clamp(sigmoid(c) + r_c tanh(dc), 0, 1)
// An empty `offsets` grid means all offsets are zero.
ComposedAvatar compose(const BranchField& branch, const RawGrid& offsets,
                       const PositionMap& canonical_template, const OffsetRanges& ranges);

struct ComposeGrad {
    RawGrid branch;
    RawGrid offsets;
};

// `grad` holds one canonical PrimitiveGrad per avatar primitive. `grad_composed`
// (optional, may be empty) is dL/d(avatar.composed).
ComposeGrad compose_backward(const BranchField& branch, const RawGrid& offsets,
                             const ComposedAvatar& avatar, const OffsetRanges& ranges,
                             std::span<const PrimitiveGrad> grad, const RawGrid& grad_composed);

// Skinned avatar ready for rendering. Primitives with zero opacity are left
// out (soft filter); `source` maps each primitive to its canonical index.
struct PosedAvatar {
    std::vector<GaussianPrimitive> primitives;
    std::vector<int> source;
};

PosedAvatar pose_avatar(const ComposedAvatar& avatar, const SkinningField& field);

// Pulls posed-primitive gradients back to canonical primitives.
std::vector<PrimitiveGrad> pose_avatar_backward(const ComposedAvatar& avatar,
                                                const PosedAvatar& posed,
                                                const SkinningField& field,
                                                std::span<const PrimitiveGrad> grad);

struct AvatarRig {
    Skeleton skeleton;
    SkinWeights weights;
    PositionMap canonical;  // template positions, rest pose
};

// compose(branch, net(P(pose), camera forward), template) followed by LBS.
// `net` may be null (offsets zero).
PosedAvatar build_avatar(const BranchField& branch, const OffsetNetwork* net, const AvatarRig& rig,
                         const Pose& pose, const Camera& camera, const OffsetRanges& ranges);

}  // namespace drape
