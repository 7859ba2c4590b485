#include "drape/eval.hpp"

#include "drape/renderer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace drape {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw ValidationError(std::string(what) + ": image shapes differ");
}

// Normalized 1D Gaussian taps; the 2D window is their outer product.
std::array<double, 11> gaussian_taps() {
    std::array<double, 11> k{};
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Valid-mode separable filter of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w) {
    static const auto taps = gaussian_taps();
    const int oh = h - 10, ow = w - 10;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < 11; ++k) s += taps[k] * plane[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < 11; ++k) s += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

double mean_or_inf(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (double x : v) {
        if (std::isinf(x)) return kInfinity;
        s += x;
    }
    return s / static_cast<double>(v.size());
}

}  // namespace

double psnr(const Image& a, const Image& b, const std::vector<std::uint8_t>* mask) {
    require_same_shape(a, b, "psnr");
    if (mask && mask->size() != a.pixel_count()) throw ValidationError("psnr: mask size differs from image");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < a.pixel_count(); ++p) {
        if (mask && !(*mask)[p]) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = a.data()[p * 3 + c] - b.data()[p * 3 + c];
            sum += d * d;
        }
        count += 3;
    }
    if (count == 0) throw ValidationError("psnr: empty region");
    const double mse = sum / static_cast<double>(count);
    if (mse == 0.0) return kInfinity;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    const int h = a.height(), w = a.width();
    if (h < 11 || w < 11) throw ValidationError("ssim: images must be at least 11x11");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const std::size_t n = a.pixel_count();
    double total = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
        for (std::size_t p = 0; p < n; ++p) {
            pa[p] = a.data()[p * 3 + c];
            pb[p] = b.data()[p * 3 + c];
            paa[p] = pa[p] * pa[p];
            pbb[p] = pb[p] * pb[p];
            pab[p] = pa[p] * pb[p];
        }
        const auto ma = filter_valid(pa, h, w), mb = filter_valid(pb, h, w);
        const auto saa = filter_valid(paa, h, w), sbb = filter_valid(pbb, h, w), sab = filter_valid(pab, h, w);
        for (std::size_t i = 0; i < ma.size(); ++i) {
            const double va = saa[i] - ma[i] * ma[i];
            const double vb = sbb[i] - mb[i] * mb[i];
            const double cov = sab[i] - ma[i] * mb[i];
            total += ((2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2)) /
                     ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
        }
        count += ma.size();
    }
    return total / static_cast<double>(count);
}

Correspondence gt_correspondence(const Subject& subject, const Camera& camera, const Pose& from,
                                 const Pose& to) {
    const auto before = subject_primitives(subject, from);
    const auto after = subject_primitives(subject, to);
    SceneRender scene = render(after, camera, Vec3::Zero());
    // Composite (displacement, 1) per splat; dividing by coverage yields the
    // coverage-weighted displacement of the visible surface.
    for (std::size_t s = 0; s < scene.splats.size(); ++s) {
        const int p = scene.primitive_of_splat[s];
        const auto prev = project(before[p], camera);
        if (!prev) {
            scene.splats[s].color = Vec3::Zero();
            continue;
        }
        const Vec2 d = prev->mean - scene.splats[s].mean;
        scene.splats[s].color = Vec3(d.x(), d.y(), 1.0);
    }
    const RenderOutput out = rasterize(scene.splats, camera, Vec3::Zero());
    Correspondence corr;
    corr.flow = FlowField(camera.height, camera.width);
    corr.valid.assign(static_cast<std::size_t>(camera.height) * camera.width, 0);
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * camera.width + x;
            const double cover = out.image.at(y, x, 2);
            if (!(out.alpha[p] > 0.99 && cover > 0.99)) continue;
            corr.valid[p] = 1;
            double dx = out.image.at(y, x, 0) / cover;
            double dy = out.image.at(y, x, 1) / cover;
            // Static geometry must give an exact identity warp.
            if (std::abs(dx) < 1e-6) dx = 0.0;
            if (std::abs(dy) < 1e-6) dy = 0.0;
            corr.flow.dx(y, x) = dx;
            corr.flow.dy(y, x) = dy;
        }
    return corr;
}

std::vector<double> consistency_pairs(std::span<const Image> frames, std::span<const Correspondence> corr) {
    if (frames.size() < 2) throw ValidationError("consistency: need at least two frames");
    if (corr.size() != frames.size() - 1) throw ValidationError("consistency: missing correspondences");
    std::vector<double> out(corr.size());
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        const Correspondence& c = corr[t];
        if (c.flow.height() != frames[t].height() || c.flow.width() != frames[t].width()) {
            throw ValidationError("consistency: correspondence and frame shapes differ");
        }
        const Image compensated = warp(frames[t], c.flow);
        out[t] = psnr(compensated, frames[t + 1], &c.valid);
    }
    return out;
}

double consistency_score(std::span<const Image> frames, std::span<const Correspondence> corr) {
    return mean_or_inf(consistency_pairs(frames, corr));
}

double flow_recovery_error(const FlowBank& learned, std::span<const JitterRecord> records) {
    if (learned.size() != records.size() || records.empty()) {
        throw ValidationError("flow_recovery_error: flow bank and jitter records are not aligned");
    }
    double total = 0.0;
    std::size_t frames = 0;
    for (std::size_t f = 0; f < records.size(); ++f) {
        const FlowField& a = learned.flows[f];
        const FlowField& b = records[f].inverse;
        if (a.height() != b.height() || a.width() != b.width() ||
            records[f].garment.size() != static_cast<std::size_t>(a.height()) * a.width()) {
            throw ValidationError("flow_recovery_error: frame shapes differ");
        }
        double sum = 0.0;
        std::size_t n = 0;
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x) {
                if (!records[f].garment[static_cast<std::size_t>(y) * a.width() + x]) continue;
                sum += std::hypot(a.dx(y, x) - b.dx(y, x), a.dy(y, x) - b.dy(y, x));
                ++n;
            }
        if (n == 0) continue;
        total += sum / static_cast<double>(n);
        ++frames;
    }
    if (frames == 0) throw ValidationError("flow_recovery_error: no garment pixels");
    return total / static_cast<double>(frames);
}

double MetricReport::mean_psnr() const {
    std::vector<double> v;
    for (const auto& f : frames) v.push_back(f.psnr);
    return mean_or_inf(v);
}

double MetricReport::mean_ssim() const {
    std::vector<double> v;
    for (const auto& f : frames) v.push_back(f.ssim);
    return mean_or_inf(v);
}

double MetricReport::sc_proxy() const { return mean_or_inf(consistency); }

std::string format_metric(double v) {
    if (std::isinf(v) && v > 0) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_report_csv(const std::filesystem::path& path, std::span<const MetricReport> reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "variant,psnr,ssim,sc_proxy,flow_epe\n";
    for (const auto& r : reports) {
        out << r.variant << ',' << format_metric(r.mean_psnr()) << ',' << format_metric(r.mean_ssim()) << ','
            << format_metric(r.sc_proxy()) << ',' << (r.flow_error ? format_metric(*r.flow_error) : "") << '\n';
    }
}

void write_frame_csv(const std::filesystem::path& path, std::span<const MetricReport> reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "variant,pose,view,psnr,ssim\n";
    for (const auto& r : reports)
        for (const auto& f : r.frames)
            out << r.variant << ',' << f.pose << ',' << f.view << ',' << format_metric(f.psnr) << ','
                << format_metric(f.ssim) << '\n';
}

std::string report_summary(std::span<const MetricReport> reports) {
    std::ostringstream s;
    char line[256];
    std::snprintf(line, sizeof(line), "%-14s %10s %8s %10s %9s\n", "variant", "PSNR(dB)", "SSIM", "SC-proxy",
                  "flow EPE");
    s << line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-14s %10s %8s %10s %9s\n", r.variant.c_str(),
                      format_metric(r.mean_psnr()).c_str(), format_metric(r.mean_ssim()).c_str(),
                      format_metric(r.sc_proxy()).c_str(),
                      r.flow_error ? format_metric(*r.flow_error).c_str() : "-");
        s << line;
    }
    return s.str();
}

}  // namespace drape
