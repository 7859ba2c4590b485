#include "drape/skeleton.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>

namespace drape {

void Skeleton::validate() const {
    if (parent.empty()) throw ValidationError("skeleton has no joints");
    if (parent.size() != rest_offset.size()) {
        throw ValidationError("skeleton parent/offset arrays differ in length");
    }
    if (parent[0] != -1) throw ValidationError("joint 0 must be the root");
    for (std::size_t j = 1; j < parent.size(); ++j) {
        if (parent[j] < 0 || parent[j] >= static_cast<int>(j)) {
            throw ValidationError("joint parents must precede their children");
        }
    }
    for (const auto& o : rest_offset) {
        if (!o.allFinite()) throw ValidationError("non-finite rest offset");
    }
}

std::vector<Vec3> Skeleton::rest_positions() const {
    const auto world = forward_kinematics(*this, Pose::identity(joint_count()));
    std::vector<Vec3> out;
    out.reserve(world.size());
    for (const auto& t : world) out.push_back(t.translation);
    return out;
}

Pose Pose::identity(int joints) {
    Pose p;
    p.local_rotation.assign(static_cast<std::size_t>(joints), Quat::identity());
    return p;
}

void Pose::validate(int joints) const {
    if (static_cast<int>(local_rotation.size()) != joints) {
        throw ValidationError("pose joint count does not match skeleton");
    }
    for (const auto& q : local_rotation) {
        if (!q.finite() || std::abs(q.norm() - 1.0) > 1e-6) {
            throw ValidationError("pose rotations must be unit quaternions");
        }
    }
    if (!root_translation.allFinite()) throw ValidationError("non-finite root translation");
}

PositionMap::PositionMap(int h, int w)
    : height(h), width(w),
      position(static_cast<std::size_t>(h) * w, Vec3::Zero()),
      valid(static_cast<std::size_t>(h) * w, 0) {}

std::size_t PositionMap::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

SkinWeights::SkinWeights(int h, int w, int j)
    : height(h), width(w), joints(j), weight(static_cast<std::size_t>(h) * w * j, 0.0) {}

void SkinWeights::validate(const PositionMap& layout) const {
    if (height != layout.height || width != layout.width) {
        throw ValidationError("skin weight grid does not match the position map");
    }
    for (std::size_t i = 0; i < layout.texel_count(); ++i) {
        if (!layout.is_valid(i)) continue;
        double sum = 0.0;
        for (double w : of(i)) {
            if (!(w >= 0.0)) throw ValidationError("negative skin weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("skin weights do not sum to 1");
    }
}

std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
    const int n = skeleton.joint_count();
    pose.validate(n);
    std::vector<RigidTransform> world(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const Mat3 local = quat_to_rotmat(pose.local_rotation[j]);
        if (j == 0) {
            world[0].rotation = local;
            world[0].translation = pose.root_translation + skeleton.rest_offset[0];
        } else {
            const auto& p = world[skeleton.parent[j]];
            world[j].rotation = p.rotation * local;
            world[j].translation = p.translation + p.rotation * skeleton.rest_offset[j];
        }
    }
    return world;
}

std::vector<RigidTransform> skinning_transforms(const Skeleton& skeleton, const Pose& pose) {
    const auto rest = skeleton.rest_positions();
    auto world = forward_kinematics(skeleton, pose);
    for (std::size_t j = 0; j < world.size(); ++j) {
        world[j].translation = world[j].translation - world[j].rotation * rest[j];
    }
    return world;
}

Mat3 polar_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

SkinningField skinning_field(const PositionMap& layout, const SkinWeights& weights,
                             std::span<const RigidTransform> transforms) {
    if (weights.height != layout.height || weights.width != layout.width) {
        throw ValidationError("skin weight grid does not match the position map");
    }
    if (weights.joints != static_cast<int>(transforms.size())) {
        throw ValidationError("skin weight joint count does not match the transforms");
    }
    const std::size_t n = layout.texel_count();
    SkinningField f;
    f.height = layout.height;
    f.width = layout.width;
    f.valid = layout.valid;
    f.delta.assign(n, Mat3::Zero());
    f.shift.assign(n, Vec3::Zero());
    f.rotation.assign(n, Mat3::Identity());
    f.rotation_quat.assign(n, Quat::identity());

    std::vector<Mat3> delta_r(transforms.size());
    std::vector<Quat> joint_quat(transforms.size());
    for (std::size_t j = 0; j < transforms.size(); ++j) {
        delta_r[j] = transforms[j].rotation - Mat3::Identity();
        joint_quat[j] = Quat::from_rotmat(transforms[j].rotation);
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        if (!layout.valid[i]) continue;
        const auto w = weights.of(static_cast<std::size_t>(i));
        Mat3 dlin = Mat3::Zero();
        Vec3 shift = Vec3::Zero();
        int dominant = -1;
        for (std::size_t j = 0; j < transforms.size(); ++j) {
            if (w[j] == 0.0) continue;
            dlin += w[j] * delta_r[j];
            shift += w[j] * transforms[j].translation;
            if (w[j] == 1.0) dominant = static_cast<int>(j);
        }
        f.delta[i] = dlin;
        f.shift[i] = shift;
        if (dominant >= 0 || dlin.isZero(0.0)) {
            // single-joint texel: the blend is that joint's rotation
            if (dominant >= 0) {
                f.rotation[i] = transforms[dominant].rotation;
                f.rotation_quat[i] = joint_quat[dominant];
            }
        } else {
            f.rotation[i] = polar_rotation(Mat3::Identity() + dlin);
            f.rotation_quat[i] = Quat::from_rotmat(f.rotation[i]);
        }
    }
    return f;
}

LbsResult lbs_transform(const PositionMap& points, const SkinWeights& weights,
                        std::span<const RigidTransform> transforms) {
    LbsResult out{points, skinning_field(points, weights, transforms)};
    for (std::size_t i = 0; i < points.texel_count(); ++i) {
        if (points.valid[i]) out.posed.position[i] = out.field.apply(i, points.position[i]);
    }
    return out;
}

PositionMap position_map(const PositionMap& templ, const Skeleton& skeleton,
                         const SkinWeights& weights, const Pose& pose) {
    skeleton.validate();
    const auto transforms = skinning_transforms(skeleton, pose);
    return lbs_transform(templ, weights, transforms).posed;
}

}  // namespace drape
