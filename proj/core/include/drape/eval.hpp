#pragma once

#include "drape/core.hpp"
#include "drape/flow.hpp"
#include "drape/synthdata.hpp"

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace drape {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// 10 log10(1 / MSE) over all channels; +inf when MSE is 0. With a mask
// (one entry per pixel) only masked pixels count.
double psnr(const Image& a, const Image& b, const std::vector<std::uint8_t>* mask = nullptr);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5) over every position
// where the window fits, C1 = 0.01^2, C2 = 0.03^2, averaged over channels and
// positions.
double ssim(const Image& a, const Image& b);

// Ground-truth motion between two renders of the same view. Pixel x of the
// later frame shows the surface point that was at x + flow(x) in the earlier
// frame; `valid` marks fully covered pixels.
struct Correspondence {
    FlowField flow;
    std::vector<std::uint8_t> valid;
};

Correspondence gt_correspondence(const Subject& subject, const Camera& camera, const Pose& from,
                                 const Pose& to);

// PSNR between frame t+1 and frame t motion-compensated onto it, over the
// valid pixels, for each consecutive pair. corr[t] maps frame t to t+1.
std::vector<double> consistency_pairs(std::span<const Image> frames, std::span<const Correspondence> corr);
// Mean of consistency_pairs() ("SC-proxy").
double consistency_score(std::span<const Image> frames, std::span<const Correspondence> corr);

// Mean endpoint error between each learned flow and the recorded inverse
// jitter over garment pixels, averaged over frames.
double flow_recovery_error(const FlowBank& learned, std::span<const JitterRecord> records);

struct FrameMetric {
    int pose = 0;
    int view = 0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    std::string variant;
    std::vector<FrameMetric> frames;       // against the ideal try-on
    std::vector<double> consistency;       // per consecutive pose pair and view
    std::optional<double> flow_error;      // only when jitter records exist

    double mean_psnr() const;
    double mean_ssim() const;
    double sc_proxy() const;
};

// "inf" for +infinity, otherwise %.6f.
std::string format_metric(double v);

// One row per report: variant,psnr,ssim,sc_proxy,flow_epe (flow_epe empty
// when absent).
void write_report_csv(const std::filesystem::path& path, std::span<const MetricReport> reports);
// One row per frame: variant,pose,view,psnr,ssim.
void write_frame_csv(const std::filesystem::path& path, std::span<const MetricReport> reports);
std::string report_summary(std::span<const MetricReport> reports);

}  // namespace drape
