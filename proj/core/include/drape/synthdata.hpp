#pragma once

#include "drape/core.hpp"
#include "drape/deformer.hpp"
#include "drape/skeleton.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace drape {

// Joint layout of the synthetic humanoid.
enum Joint : int { kRoot = 0, kSpine = 1, kHead = 2, kLeftArm = 3, kRightArm = 4, kLegs = 5, kJointCount = 6 };

enum class Pattern { solid, stripes, checker };

struct GarmentSpec {
    std::vector<std::uint8_t> mask;  // UV texels covered by the garment
    Pattern pattern = Pattern::solid;
    Vec3 color_a = Vec3::Zero();
    Vec3 color_b = Vec3::Zero();
    int period = 8;  // texels per full pattern cycle

    Vec3 color_at(int row, int col) const;
    void validate(const PositionMap& layout) const;
};

// Ground-truth articulated subject.
struct Subject {
    AvatarRig rig;
    // One primitive per UV texel (invalid texels are placeholders) in the
    // canonical pose, before pose-dependent garment deformation.
    std::vector<GaussianPrimitive> canonical;
    std::vector<Vec3> normal;      // canonical surface normal per texel
    std::vector<double> chart_u;   // around-the-limb angle in [0, 2pi)
    std::vector<double> chart_v;   // along-the-limb parameter in [0, 1]
    GarmentSpec garment;           // source garment (stripes on the torso)
};

// Capsule-limb humanoid on a uv_size x uv_size grid (uv_size: multiple of 16,
// >= 32). Charts, with q = uv_size / 4: torso 2q x 2q at the top-left, arms
// q x 2q to its right, legs q x 2q below it, head q x q beside the legs; all
// other texels are invalid. Skin weights: normalized inverse-square distance
// to the bone segments that act on each chart.
Subject generate_subject(std::uint64_t seed, int uv_size = 64);

// Target garment: checker over the same texels as the source garment.
GarmentSpec target_garment(const Subject& subject);

// Twist of the spine joint about the vertical axis, in radians.
double spine_twist(const Pose& pose);

// Primitives of the subject at `pose`: canonical map with the pose-dependent
// garment deformation and wrinkle shading, recolored by `garment` when given,
// then skinned.
std::vector<GaussianPrimitive> subject_primitives(const Subject& subject, const Pose& pose,
                                                  const GarmentSpec* garment = nullptr);

// Cyclic motion: arm swing, spine twist and a small leg swing.
std::vector<Pose> pose_sequence(int count);

// `views` cameras on a horizontal ring around the subject.
std::vector<Camera> camera_ring(int views, int resolution, double radius, double focal);

// Renders every (pose, view); frame index = pose * views + view.
std::vector<Image> render_dataset(const Subject& subject, std::span<const Camera> cameras,
                                  std::span<const Pose> poses, const Vec3& background,
                                  const GarmentSpec* garment = nullptr);

// Per-frame injected degradation and its ground truth.
struct JitterRecord {
    FlowField warp;      // D = warp(ideal, warp) before color jitter
    FlowField inverse;   // warp(D, inverse) ~ ideal on the garment
    std::vector<std::uint8_t> garment;  // H*W pixel mask of the garment
    Vec3 gain = Vec3::Ones();
    Vec3 offset = Vec3::Zero();
};

struct DegradeResult {
    std::vector<Image> degraded;
    std::vector<Image> ideal;
    std::vector<JitterRecord> records;
};

struct DegradeOptions {
    double magnitude = 2.0;    // max jitter endpoint length in pixels
    bool color_jitter = true;  // gain in [0.9, 1.1], offset in [-0.03, 0.03]
    std::uint64_t seed = 0;
};

// For every frame (pose index, view): render the try-on (garment recolored),
// apply a smooth masked warp of max magnitude `magnitude` inside the garment
// region and a per-channel gain/offset.
DegradeResult degrade(const Subject& subject, const GarmentSpec& garment,
                      std::span<const Camera> cameras, std::span<const Pose> poses,
                      std::span<const std::pair<int, int>> frames, const Vec3& background,
                      const DegradeOptions& options);

// Smooth field: 3 sinusoids per axis (wavelength >= 48 px) scaled so the
// largest endpoint inside the weight map is exactly `magnitude`.
FlowField smooth_jitter(int height, int width, const std::vector<double>& weight, double magnitude,
                        std::uint64_t seed);

// Solves F(x) = -J(x + F(x)) by damped fixed-point iteration.
FlowField invert_flow(const FlowField& jitter, int iterations = 200);

// Garment pixel mask from a coverage render and its 3 px inward feather.
std::vector<double> feather_mask(const std::vector<std::uint8_t>& mask, int height, int width,
                                 double radius = 3.0);

// `k` evenly strided indices out of `count`, starting at 0.
std::vector<int> subsample_poses(int count, int k);

}  // namespace drape
