#pragma once

#include "drape/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace drape {

// Kinematic chain. Joint 0 is the root; every other joint's parent has a
// smaller index, which rules out cycles by construction.
struct Skeleton {
    std::vector<int> parent;
    std::vector<Vec3> rest_offset;  // from parent (root: from world origin)

    int joint_count() const { return static_cast<int>(parent.size()); }
    void validate() const;
    std::vector<Vec3> rest_positions() const;
};

struct Pose {
    std::vector<Quat> local_rotation;
    Vec3 root_translation = Vec3::Zero();

    static Pose identity(int joints);
    void validate(int joints) const;
};

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// UV grid of 3-vector positions with a validity mask.
struct PositionMap {
    int height = 0;
    int width = 0;
    std::vector<Vec3> position;
    std::vector<std::uint8_t> valid;

    PositionMap() = default;
    PositionMap(int h, int w);
    std::size_t texel_count() const { return position.size(); }
    std::size_t valid_count() const;
    bool is_valid(std::size_t i) const { return valid[i] != 0; }
};

struct SkinWeights {
    int height = 0;
    int width = 0;
    int joints = 0;
    std::vector<double> weight;  // texel-major, `joints` entries per texel

    SkinWeights() = default;
    SkinWeights(int h, int w, int j);
    std::span<const double> of(std::size_t texel) const {
        return {weight.data() + texel * joints, static_cast<std::size_t>(joints)};
    }
    std::span<double> of(std::size_t texel) {
        return {weight.data() + texel * joints, static_cast<std::size_t>(joints)};
    }
    // Throws unless weights are >= 0 and sum to 1 (tol 1e-6) on valid texels.
    void validate(const PositionMap& layout) const;
};

// World transform of every joint. Root: R = local, t = root_translation +
// rest_offset; child: parent composed with (local rotation, rest offset).
std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& pose);

// World transform relative to the rest pose (x_posed = R_j x_rest + t_j).
std::vector<RigidTransform> skinning_transforms(const Skeleton& skeleton, const Pose& pose);

// Per-texel skinning state for one pose. Independent of the skinned points,
// so it can be computed once per pose and applied to any canonical map that
// shares the template layout.
struct SkinningField {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> valid;
    std::vector<Mat3> delta;  // sum_j w_j (R_j - I)
    std::vector<Vec3> shift;  // sum_j w_j t_j
    // Polar factor of I + delta; rotates Gaussian orientations.
    std::vector<Mat3> rotation;
    std::vector<Quat> rotation_quat;

    // x + (delta x + shift): exact under identity transforms.
    Vec3 apply(std::size_t texel, const Vec3& x) const {
        return x + (delta[texel] * x + shift[texel]);
    }
    // Jacobian of apply() with respect to x.
    Mat3 linear(std::size_t texel) const { return Mat3::Identity() + delta[texel]; }
};

SkinningField skinning_field(const PositionMap& layout, const SkinWeights& weights,
                             std::span<const RigidTransform> joint_transforms);

struct LbsResult {
    PositionMap posed;
    SkinningField field;
};

// x_posed = x + sum_j w_j ((R_j - I) x + t_j). Algebraically the usual
// sum_j w_j (R_j x + t_j) for normalized weights, but exact under identity
// transforms.
LbsResult lbs_transform(const PositionMap& points, const SkinWeights& weights,
                        std::span<const RigidTransform> joint_transforms);

// P(pose): the canonical template skinned to `pose`. P(identity) == template.
PositionMap position_map(const PositionMap& templ, const Skeleton& skeleton,
                         const SkinWeights& weights, const Pose& pose);

// Rotation factor of the polar decomposition (det = +1).
Mat3 polar_rotation(const Mat3& m);

}  // namespace drape
