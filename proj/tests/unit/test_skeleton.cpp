#include "doctest.h"

#include "scenes.hpp"

#include "drape/skeleton.hpp"
#include "drape/synthdata.hpp"

using namespace drape;
using drape::testing::random_unit_quat;

namespace {

Skeleton chain_x(int joints) {
    Skeleton s;
    for (int j = 0; j < joints; ++j) {
        s.parent.push_back(j - 1);
        s.rest_offset.push_back(j == 0 ? Vec3(Vec3::Zero()) : Vec3(Vec3::UnitX()));
    }
    return s;
}

Eigen::Matrix4d homogeneous(const Mat3& r, const Vec3& t) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = r;
    m.topRightCorner<3, 1>() = t;
    return m;
}

PositionMap random_points(std::mt19937_64& rng, int h, int w) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PositionMap m(h, w);
    for (std::size_t i = 0; i < m.texel_count(); ++i) {
        m.valid[i] = (i % 5) != 3;
        m.position[i] = Vec3(u(rng), u(rng), u(rng));
    }
    return m;
}

SkinWeights random_weights(std::mt19937_64& rng, int h, int w, int joints) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SkinWeights sw(h, w, joints);
    for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
        double s = 0.0;
        for (double& x : sw.of(i)) s += (x = u(rng));
        for (double& x : sw.of(i)) x /= s;
    }
    return sw;
}

}  // namespace

TEST_CASE("skeleton validation rejects bad parents") {
    Skeleton s = chain_x(3);
    CHECK_NOTHROW(s.validate());
    s.parent[2] = 2;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s.parent[2] = 1;
    s.parent[0] = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    CHECK_THROWS_AS(Skeleton{}.validate(), ValidationError);
}

TEST_CASE("pose validation") {
    Pose p = Pose::identity(3);
    CHECK_NOTHROW(p.validate(3));
    CHECK_THROWS_AS(p.validate(2), ValidationError);
    p.local_rotation[1] = Quat{1.1, 0, 0, 0};
    CHECK_THROWS_AS(p.validate(3), ValidationError);
}

TEST_CASE("identity pose puts joints at cumulative rest offsets") {
    const Skeleton s = chain_x(4);
    const auto world = forward_kinematics(s, Pose::identity(4));
    for (int j = 0; j < 4; ++j) CHECK((world[j].translation - Vec3(j, 0, 0)).norm() == 0.0);
}

TEST_CASE("root rotation of 90 degrees sweeps a +x chain onto +y") {
    const Skeleton s = chain_x(3);
    Pose p = Pose::identity(3);
    p.local_rotation[0] = Quat::from_axis_angle(Vec3::UnitZ(), M_PI / 2);
    const auto world = forward_kinematics(s, p);
    CHECK((world[1].translation - Vec3(0, 1, 0)).norm() < 1e-12);
    CHECK((world[2].translation - Vec3(0, 2, 0)).norm() < 1e-12);
}

TEST_CASE("forward kinematics matches a homogeneous matrix-chain oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Skeleton s;
        s.parent = {-1, 0, 1};
        s.rest_offset = {Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))};
        Pose p = Pose::identity(3);
        for (auto& q : p.local_rotation) q = random_unit_quat(rng);
        p.root_translation = Vec3(u(rng), u(rng), u(rng));
        const auto world = forward_kinematics(s, p);
        Eigen::Matrix4d m = homogeneous(quat_to_rotmat(p.local_rotation[0]), p.root_translation + s.rest_offset[0]);
        for (int j = 0; j < 3; ++j) {
            if (j > 0) m = m * homogeneous(quat_to_rotmat(p.local_rotation[j]), s.rest_offset[j]);
            CHECK((m.topLeftCorner<3, 3>() - world[j].rotation).norm() < 1e-12);
            CHECK((m.topRightCorner<3, 1>() - world[j].translation).norm() < 1e-12);
        }
    }
}

TEST_CASE("LBS with the identity pose is exactly the identity") {
    std::mt19937_64 rng(12);
    const Skeleton s = chain_x(3);
    const PositionMap pts = random_points(rng, 4, 5);
    const SkinWeights w = random_weights(rng, 4, 5, 3);
    const PositionMap out = position_map(pts, s, w, Pose::identity(3));
    for (std::size_t i = 0; i < pts.texel_count(); ++i)
        if (pts.valid[i]) CHECK(out.position[i] == pts.position[i]);
}

TEST_CASE("a point fully bound to one joint moves rigidly with it") {
    const Skeleton s = chain_x(2);
    PositionMap pts(1, 1);
    pts.valid[0] = 1;
    pts.position[0] = Vec3(2.0, 0.5, 0.0);
    SkinWeights w(1, 1, 2);
    w.weight = {0.0, 1.0};
    Pose p = Pose::identity(2);
    p.local_rotation[1] = Quat::from_axis_angle(Vec3::UnitZ(), M_PI / 2);
    const auto r = lbs_transform(pts, w, skinning_transforms(s, p));
    // rotation about joint 1 at (1,0,0): (2,0.5) -> (1-0.5, 1)
    CHECK((r.posed.position[0] - Vec3(0.5, 1.0, 0.0)).norm() < 1e-12);
    CHECK((r.field.rotation[0] - quat_to_rotmat(p.local_rotation[1])).norm() < 1e-12);
}

TEST_CASE("half/half weights over two translated joints give the midpoint") {
    std::vector<RigidTransform> t(2);
    t[0].translation = Vec3(1, 0, 0);
    t[1].translation = Vec3(0, 3, 0);
    PositionMap pts(1, 1);
    pts.valid[0] = 1;
    pts.position[0] = Vec3(0.2, 0.2, 0.2);
    SkinWeights w(1, 1, 2);
    w.weight = {0.5, 0.5};
    const auto r = lbs_transform(pts, w, t);
    CHECK((r.posed.position[0] - Vec3(0.7, 1.7, 0.2)).norm() < 1e-12);
}

TEST_CASE("LBS is equivariant under a global rigid motion") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const PositionMap pts = random_points(rng, 3, 6);
    const SkinWeights w = random_weights(rng, 3, 6, 3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<RigidTransform> t(3), moved(3);
        const Mat3 g = quat_to_rotmat(random_unit_quat(rng));
        const Vec3 gt(u(rng), u(rng), u(rng));
        for (int j = 0; j < 3; ++j) {
            t[j].rotation = quat_to_rotmat(random_unit_quat(rng));
            t[j].translation = Vec3(u(rng), u(rng), u(rng));
            moved[j].rotation = g * t[j].rotation;
            moved[j].translation = g * t[j].translation + gt;
        }
        const auto a = lbs_transform(pts, w, t);
        const auto b = lbs_transform(pts, w, moved);
        for (std::size_t i = 0; i < pts.texel_count(); ++i) {
            if (!pts.valid[i]) continue;
            CHECK((g * a.posed.position[i] + gt - b.posed.position[i]).norm() < 1e-10);
            CHECK((g * a.field.rotation[i] - b.field.rotation[i]).norm() < 1e-10);
        }
    }
}

TEST_CASE("skinning rotations are proper rotations") {
    std::mt19937_64 rng(14);
    const PositionMap pts = random_points(rng, 3, 3);
    const SkinWeights w = random_weights(rng, 3, 3, 3);
    std::vector<RigidTransform> t(3);
    for (auto& x : t) x.rotation = quat_to_rotmat(random_unit_quat(rng));
    const auto f = skinning_field(pts, w, t);
    for (std::size_t i = 0; i < pts.texel_count(); ++i) {
        if (!pts.valid[i]) continue;
        CHECK((f.rotation[i] * f.rotation[i].transpose() - Mat3::Identity()).norm() < 1e-10);
        CHECK(f.rotation[i].determinant() == doctest::Approx(1.0));
        CHECK((quat_to_rotmat(f.rotation_quat[i]) - f.rotation[i]).norm() < 1e-10);
    }
}

TEST_CASE("skin weights validation") {
    PositionMap pts(1, 2);
    pts.valid = {1, 0};
    SkinWeights w(1, 2, 2);
    w.weight = {0.3, 0.7, 5.0, 5.0};  // the invalid texel is ignored
    CHECK_NOTHROW(w.validate(pts));
    w.weight[0] = 0.4;
    CHECK_THROWS_AS(w.validate(pts), ValidationError);
    w.weight = {-0.1, 1.1, 0, 0};
    CHECK_THROWS_AS(w.validate(pts), ValidationError);
}

TEST_CASE("rigid global rotation rotates every template texel by the same matrix") {
    const Subject subj = generate_subject(0, 32);
    Pose p = Pose::identity(kJointCount);
    p.local_rotation[kRoot] = Quat::from_axis_angle(Vec3::UnitY(), 0.7);
    const PositionMap posed = position_map(subj.rig.canonical, subj.rig.skeleton, subj.rig.weights, p);
    const Mat3 r = quat_to_rotmat(p.local_rotation[kRoot]);
    const Vec3 root = subj.rig.skeleton.rest_positions()[kRoot];
    for (std::size_t i = 0; i < posed.texel_count(); ++i) {
        if (!posed.valid[i]) continue;
        CHECK((posed.position[i] - (r * (subj.rig.canonical.position[i] - root) + root)).norm() < 1e-12);
    }
}

TEST_CASE("an arm pose moves arm texels and leaves texels without arm weight fixed") {
    const Subject subj = generate_subject(0, 32);
    Pose p = Pose::identity(kJointCount);
    p.local_rotation[kLeftArm] = Quat::from_axis_angle(Vec3::UnitZ(), 0.8);
    const PositionMap posed = position_map(subj.rig.canonical, subj.rig.skeleton, subj.rig.weights, p);
    int moved = 0, fixed = 0;
    for (std::size_t i = 0; i < posed.texel_count(); ++i) {
        if (!posed.valid[i]) continue;
        const double d = (posed.position[i] - subj.rig.canonical.position[i]).norm();
        if (subj.rig.weights.of(i)[kLeftArm] == 0.0) {
            CHECK(d <= 1e-12);
            ++fixed;
        } else if (subj.rig.weights.of(i)[kLeftArm] > 0.5) {
            CHECK(d > 1e-3);
            ++moved;
        }
    }
    CHECK(moved > 0);
    CHECK(fixed > 0);
}
