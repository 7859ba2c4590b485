#include "doctest.h"

#include "scenes.hpp"

#include "drape/deformer.hpp"
#include "drape/synthdata.hpp"

using namespace drape;
using namespace drape::testing;

namespace {

PositionMap small_layout(std::mt19937_64& rng, int h = 4, int w = 5) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    PositionMap m(h, w);
    for (std::size_t i = 0; i < m.texel_count(); ++i) {
        m.valid[i] = i % 4 != 1;
        m.position[i] = Vec3(u(rng), u(rng), u(rng));
    }
    return m;
}

BranchField random_field(std::mt19937_64& rng, const PositionMap& layout) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    BranchField f = BranchField::initial(Branch::tar, layout, 0.05, 0.5, Vec3::Constant(0.5));
    for (std::size_t i = 0; i < layout.texel_count(); ++i)
        if (layout.is_valid(i))
            for (int c = 0; c < kRawChannels; ++c) f.raw.texel(i)[c] = u(rng);
    return f;
}

bool same_primitive(const GaussianPrimitive& a, const GaussianPrimitive& b) {
    return a.position == b.position && a.rotation.vec() == b.rotation.vec() && a.scale == b.scale &&
           a.opacity == b.opacity && a.color == b.color;
}

}  // namespace

TEST_CASE("initial branch field decodes to the requested primitives") {
    std::mt19937_64 rng(31);
    const PositionMap layout = small_layout(rng);
    const BranchField f = BranchField::initial(Branch::src, layout, 0.02, 0.9, Vec3(0.2, 0.5, 0.7));
    const auto avatar = compose(f, RawGrid(), layout, OffsetRanges{});
    CHECK(avatar.primitives.size() == layout.valid_count());
    for (std::size_t k = 0; k < avatar.primitives.size(); ++k) {
        const auto& g = avatar.primitives[k];
        CHECK(g.position == layout.position[avatar.texel[k]]);
        CHECK(g.rotation.vec() == Quat::identity().vec());
        CHECK(g.scale.x() == doctest::Approx(0.02));
        CHECK(g.opacity == doctest::Approx(0.9));
        CHECK(g.color.z() == doctest::Approx(0.7));
    }
    CHECK_THROWS_AS(BranchField::initial(Branch::src, layout, 0.0, 0.9, Vec3::Constant(0.5)), ValidationError);
    CHECK_THROWS_AS(BranchField::initial(Branch::src, layout, 0.1, 1.0, Vec3::Constant(0.5)), ValidationError);
}

TEST_CASE("fresh offset network outputs exactly zero and skips invalid texels") {
    std::mt19937_64 rng(32);
    const PositionMap layout = small_layout(rng);
    const OffsetNetwork net(layout.height, layout.width, 16, 3, 5);
    for (int t = 0; t < 5; ++t) {
        const Vec3 view = random_unit_quat(rng).vec().head<3>().normalized();
        const RawGrid o = net.forward(small_layout(rng), view);
        for (double v : o.data) CHECK(v == 0.0);
    }
    OffsetNetwork trained = net;
    for (double& p : trained.parameters()) p += 0.1;
    const RawGrid o = trained.forward(layout, Vec3::UnitZ());
    for (std::size_t i = 0; i < layout.texel_count(); ++i) {
        const bool any = std::any_of(o.texel(i), o.texel(i) + kRawChannels, [](double v) { return v != 0.0; });
        CHECK(any == layout.is_valid(i));
    }
}

TEST_CASE("offsets depend on the view once the network is trained") {
    std::mt19937_64 rng(33);
    const PositionMap layout = small_layout(rng);
    OffsetNetwork net(layout.height, layout.width, 8, 2, 1);
    std::normal_distribution<double> n(0.0, 0.5);
    for (double& p : net.parameters()) p = n(rng);
    const RawGrid a = net.forward(layout, Vec3::UnitZ());
    const RawGrid b = net.forward(layout, Vec3::UnitX());
    CHECK(a.data != b.data);
    // Equal inputs give equal outputs: both branches see the same function.
    CHECK(net.forward(layout, Vec3::UnitZ()).data == a.data);
}

TEST_CASE("offset network rejects bad inputs") {
    std::mt19937_64 rng(34);
    PositionMap layout = small_layout(rng);
    const OffsetNetwork net(layout.height, layout.width, 4, 1, 1);
    CHECK_THROWS_AS(net.forward(layout, Vec3(0, 0, 2)), ValidationError);
    CHECK_THROWS_AS(net.forward(small_layout(rng, 3, 3), Vec3::UnitZ()), ValidationError);
    layout.position[0].x() = std::nan("");
    layout.valid[0] = 1;
    CHECK_THROWS_AS(net.forward(layout, Vec3::UnitZ()), ValidationError);
    CHECK_THROWS_AS(OffsetNetwork(0, 3, 4, 1, 1), ValidationError);
}

TEST_CASE("zero offsets reproduce the branch-only avatar bitwise") {
    std::mt19937_64 rng(35);
    const PositionMap layout = small_layout(rng);
    for (int t = 0; t < 10; ++t) {
        const BranchField f = random_field(rng, layout);
        const auto a = compose(f, RawGrid(), layout, OffsetRanges{});
        const auto b = compose(f, RawGrid(layout.height, layout.width), layout, OffsetRanges{});
        REQUIRE(a.primitives.size() == b.primitives.size());
        for (std::size_t k = 0; k < a.primitives.size(); ++k) CHECK(same_primitive(a.primitives[k], b.primitives[k]));
        CHECK(a.composed.data == b.composed.data);
    }
}

TEST_CASE("closed-form composition examples") {
    PositionMap layout(1, 1);
    layout.valid[0] = 1;
    BranchField f = BranchField::initial(Branch::tar, layout, 1.0, 0.5, Vec3::Constant(0.5));
    RawGrid o(1, 1);
    // a = 0, tanh(da) = -0.5: opacity 0, suppressed.
    o.texel(0)[kRawOpacity] = std::atanh(-0.5);
    // s = 0, tanh(ds) = 0.5 with r_s = 0.5: scale e^0.25.
    o.texel(0)[kRawScale] = std::atanh(0.5);
    const auto avatar = compose(f, o, layout, OffsetRanges{});
    CHECK(avatar.primitives[0].opacity == 0.0);
    CHECK(avatar.primitives[0].scale.x() == doctest::Approx(std::exp(0.25)).epsilon(1e-14));
    CHECK(avatar.primitives[0].scale.y() == 1.0);
}

TEST_CASE("composed primitives always satisfy the primitive invariants") {
    std::mt19937_64 rng(36);
    std::uniform_real_distribution<double> big(-30.0, 30.0);
    const PositionMap layout = small_layout(rng);
    for (int t = 0; t < 50; ++t) {
        BranchField f = random_field(rng, layout);
        RawGrid o(layout.height, layout.width);
        for (double& v : o.data) v = big(rng);
        for (std::size_t i = 0; i < layout.texel_count(); ++i)
            if (layout.is_valid(i)) f.raw.texel(i)[kRawRotation] = 2.0;  // keep the quaternion away from 0
        const auto avatar = compose(f, o, layout, OffsetRanges{});
        const OffsetRanges r;
        for (std::size_t k = 0; k < avatar.primitives.size(); ++k) {
            const auto& g = avatar.primitives[k];
            CHECK_NOTHROW(g.validate());
            const std::size_t i = static_cast<std::size_t>(avatar.texel[k]);
            for (int c = 0; c < 3; ++c) {
                const double dev = g.position[c] - layout.position[i][c] - f.raw.texel(i)[kRawPosition + c];
                CHECK(std::abs(dev) <= r.position + 1e-12);
            }
        }
    }
}

TEST_CASE("soft filter drops suppressed texels from the posed avatar and the render") {
    const Subject subj = generate_subject(3, 32);
    const auto& layout = subj.rig.canonical;
    BranchField f = BranchField::initial(Branch::tar, layout, 0.03, 0.7, Vec3::Constant(0.4));
    RawGrid o(layout.height, layout.width);
    BranchField pruned = f;
    PositionMap pruned_layout = layout;
    int suppressed = 0;
    for (std::size_t i = 0; i < layout.texel_count(); ++i) {
        if (!layout.is_valid(i) || i % 3 != 0) continue;
        o.texel(i)[kRawOpacity] = -5.0;  // 0.7 + tanh(-5) < 0
        pruned.valid[i] = 0;
        pruned_layout.valid[i] = 0;
        ++suppressed;
    }
    REQUIRE(suppressed > 0);
    const Pose pose = pose_sequence(8)[3];
    const auto transforms = skinning_transforms(subj.rig.skeleton, pose);
    const auto field = skinning_field(layout, subj.rig.weights, transforms);
    const auto posed = pose_avatar(compose(f, o, layout, OffsetRanges{}), field);
    const auto pruned_posed = pose_avatar(compose(pruned, RawGrid(), pruned_layout, OffsetRanges{}), field);
    CHECK(posed.primitives.size() == layout.valid_count() - suppressed);
    const Camera cam = camera_ring(1, 64, 3.2, 100.0)[0];
    const Image a = render(posed.primitives, cam, Vec3::Zero()).raster.image;
    const Image b = render(pruned_posed.primitives, cam, Vec3::Zero()).raster.image;
    double diff = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) diff = std::max(diff, std::abs(a.data()[k] - b.data()[k]));
    CHECK(diff <= 1e-12);
}

TEST_CASE("canonical pose with zero offsets keeps primitives on the template") {
    const Subject subj = generate_subject(0, 32);
    const BranchField f = BranchField::initial(Branch::src, subj.rig.canonical, 0.02, 0.8, Vec3::Constant(0.5));
    const OffsetNetwork net(32, 32, 8, 2, 9);
    const Camera cam = camera_ring(2, 64, 3.2, 100.0)[1];
    const auto posed = build_avatar(f, &net, subj.rig, Pose::identity(kJointCount), cam, OffsetRanges{});
    std::vector<Vec3> valid;
    for (std::size_t i = 0; i < subj.rig.canonical.texel_count(); ++i)
        if (subj.rig.canonical.is_valid(i)) valid.push_back(subj.rig.canonical.position[i]);
    for (std::size_t k = 0; k < posed.primitives.size(); ++k) {
        CHECK(posed.primitives[k].position == valid.at(posed.source[k]));
    }
}

TEST_CASE("a rigid global pose rotates every primitive rigidly") {
    const Subject subj = generate_subject(0, 32);
    const BranchField f = BranchField::initial(Branch::src, subj.rig.canonical, 0.02, 0.8, Vec3::Constant(0.5));
    const Camera cam = camera_ring(1, 64, 3.2, 100.0)[0];
    Pose p = Pose::identity(kJointCount);
    p.local_rotation[kRoot] = Quat::from_axis_angle(Vec3(0.3, 1.0, 0.1).normalized(), 1.1);
    const auto rest = build_avatar(f, nullptr, subj.rig, Pose::identity(kJointCount), cam, OffsetRanges{});
    const auto moved = build_avatar(f, nullptr, subj.rig, p, cam, OffsetRanges{});
    const Mat3 r = quat_to_rotmat(p.local_rotation[kRoot]);
    const Vec3 root = subj.rig.skeleton.rest_positions()[kRoot];
    REQUIRE(rest.primitives.size() == moved.primitives.size());
    for (std::size_t k = 0; k < rest.primitives.size(); ++k) {
        CHECK((moved.primitives[k].position - (r * (rest.primitives[k].position - root) + root)).norm() < 1e-10);
        const Mat3 ro = quat_to_rotmat(moved.primitives[k].rotation.normalized());
        CHECK((ro - r * quat_to_rotmat(rest.primitives[k].rotation)).norm() < 1e-10);
    }
}

TEST_CASE("compose rejects misaligned grids") {
    std::mt19937_64 rng(37);
    const PositionMap layout = small_layout(rng);
    const BranchField f = random_field(rng, layout);
    CHECK_THROWS_AS(compose(f, RawGrid(2, 2), layout, OffsetRanges{}), ValidationError);
    PositionMap other = layout;
    other.valid[0] = !other.valid[0];
    CHECK_THROWS_AS(compose(f, RawGrid(), other, OffsetRanges{}), ValidationError);
}
