#pragma once

#include "drape/core.hpp"
#include "drape/synthdata.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace drape {

struct SynthConfig {
    std::uint64_t seed = 0;
    int views = 4;
    int poses = 40;
    int resolution = 128;
    int subsample = 20;  // tar-branch poses
    int uv_size = 64;
    double jitter = 2.0;  // max jitter endpoint, pixels
    bool color_jitter = true;
    double camera_radius = 3.2;
    double focal = 200.0;  // at 128 px; scaled with resolution

    void validate() const;
    // Focal length at `resolution`.
    double scaled_focal() const { return focal * resolution / 128.0; }
};

// Frames are indexed pose-major: source/ideal frame = pose * views + view,
// degraded frame = i * views + view for the i-th subsampled pose.
struct SupervisionSet {
    SynthConfig config;
    Subject subject;      // ground truth; training only reads subject.rig
    GarmentSpec garment;  // target garment
    std::vector<Camera> cameras;
    std::vector<Pose> poses;
    std::vector<int> tar_poses;
    std::vector<Image> source;
    std::vector<Image> degraded;
    std::vector<Image> ideal;  // ideal try-on for every (pose, view)
    std::vector<JitterRecord> jitter;

    int views() const { return static_cast<int>(cameras.size()); }
    std::size_t source_index(int pose, int view) const {
        return static_cast<std::size_t>(pose) * cameras.size() + view;
    }
    std::size_t tar_index(int i, int view) const {
        return static_cast<std::size_t>(i) * cameras.size() + view;
    }
    Vec3 background() const { return Vec3::Zero(); }
};

// Pure function of the config. Images are already on the 8-bit grid, so a
// set read back from disk is bitwise equal to the one generated in memory.
SupervisionSet synthesize(const SynthConfig& config);

// Directory layout:
//   manifest.json           format, config, counts, tar poses, file hashes
//   source/f_PPP_V.png      source frames
//   degraded/f_III_V.png    degraded try-on frames
//   ideal/f_PPP_V.png       ideal try-on frames
//   rig/*.drt               skeleton, template, skin weights
//   views.drt, poses.drt    cameras and poses
//   jitter/*.drt            injected warps, inverses, garment masks, color jitter
void write_dataset(const std::filesystem::path& dir, const SupervisionSet& set);

// Reads and validates a dataset directory (file hashes, counts, shapes). The
// ground-truth subject is regenerated from the stored seed and checked
// against the stored template.
SupervisionSet read_dataset(const std::filesystem::path& dir);

}  // namespace drape
