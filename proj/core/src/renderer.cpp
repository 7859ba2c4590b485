#include "drape/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace drape {

namespace detail {

struct PreparedSplat {
    Vec2 mean;
    double conic_xx, conic_xy, conic_yy;
    double q_limit;  // conservative bound on the quadratic form where alpha >= 1/255
    double opacity;
    Vec3 color;
    int xmin, xmax, ymin, ymax;  // inclusive pixel bounds, empty when xmin > xmax
};

struct Contribution {
    std::uint32_t entry;  // index into tile_entries
    std::uint32_t pixel;  // tile-local pixel index
    double gauss;
    double transmittance;  // before this contribution
};

struct RasterState {
    int width = 0;
    int height = 0;
    int tiles_x = 0;
    int tiles_y = 0;
    Vec3 background = Vec3::Zero();
    std::vector<PreparedSplat> prepared;
    std::vector<std::uint32_t> tile_offset;
    std::vector<std::uint32_t> tile_entries;
    std::vector<std::vector<Contribution>> contributions;
};

}  // namespace detail

namespace {

using detail::Contribution;
using detail::PreparedSplat;
using detail::RasterState;

PreparedSplat prepare(const Splat2D& s, int width, int height) {
    PreparedSplat p;
    p.mean = s.mean;
    p.opacity = s.opacity;
    p.color = s.color;
    const double a = s.covariance(0, 0);
    const double b = 0.5 * (s.covariance(0, 1) + s.covariance(1, 0));
    const double c = s.covariance(1, 1);
    const double det = a * c - b * b;
    if (!(det > 0.0) || !(a > 0.0)) {
        throw ValidationError("splat covariance is not positive definite");
    }
    p.conic_xx = c / det;
    p.conic_xy = -b / det;
    p.conic_yy = a / det;
    p.xmin = 0;
    p.xmax = -1;
    p.ymin = 0;
    p.ymax = -1;
    p.q_limit = -1.0;
    if (s.opacity * 255.0 <= 1.0) return p;  // never reaches the 1/255 threshold
    const double k2 = 2.0 * std::log(255.0 * s.opacity);
    p.q_limit = k2 * (1.0 + 1e-9) + 1e-9;
    const double k = std::sqrt(p.q_limit);
    const double hx = k * std::sqrt(a) + 1e-9;
    const double hy = k * std::sqrt(c) + 1e-9;
    p.xmin = std::max(0, static_cast<int>(std::ceil(s.mean.x() - hx)));
    p.xmax = std::min(width - 1, static_cast<int>(std::floor(s.mean.x() + hx)));
    p.ymin = std::max(0, static_cast<int>(std::ceil(s.mean.y() - hy)));
    p.ymax = std::min(height - 1, static_cast<int>(std::floor(s.mean.y() + hy)));
    return p;
}

bool splat_finite(const Splat2D& s) {
    return s.mean.allFinite() && s.covariance.allFinite() && std::isfinite(s.depth) &&
           std::isfinite(s.opacity) && s.color.allFinite();
}

}  // namespace

std::optional<Splat2D> project(const GaussianPrimitive& g, const Camera& cam) {
    const Vec3 pc = cam.rotation * g.position + cam.translation;
    if (!(pc.z() > kNearPlane)) return std::nullopt;
    const double z = pc.z();
    const double iz = 1.0 / z;
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx * iz, 0.0, -cam.fx * pc.x() * iz * iz,
        0.0, cam.fy * iz, -cam.fy * pc.y() * iz * iz;
    const Mat3 r = quat_to_rotmat_unchecked(g.rotation);
    const Mat3 rs = r * g.scale.asDiagonal();
    const Mat3 sigma = rs * rs.transpose();
    const Eigen::Matrix<double, 2, 3> t = jac * cam.rotation;
    Splat2D s;
    s.mean = Vec2(cam.fx * pc.x() * iz + cam.cx, cam.fy * pc.y() * iz + cam.cy);
    s.covariance = t * sigma * t.transpose();
    s.covariance(0, 0) += kCovarianceFloor;
    s.covariance(1, 1) += kCovarianceFloor;
    s.depth = z;
    s.opacity = g.opacity;
    s.color = g.color;
    return s;
}

PrimitiveGrad project_backward(const GaussianPrimitive& g, const Camera& cam,
                               const SplatGrad& grad) {
    const Vec3 pc = cam.rotation * g.position + cam.translation;
    const double x = pc.x(), y = pc.y(), z = pc.z();
    const double iz = 1.0 / z;
    const double iz2 = iz * iz;
    const double iz3 = iz2 * iz;
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx * iz, 0.0, -cam.fx * x * iz2,
        0.0, cam.fy * iz, -cam.fy * y * iz2;
    const Mat3 r = quat_to_rotmat_unchecked(g.rotation);
    const Vec3 s2 = g.scale.cwiseProduct(g.scale);
    const Mat3 sigma = r * s2.asDiagonal() * r.transpose();
    const Eigen::Matrix<double, 2, 3> t = jac * cam.rotation;

    const Mat2 gc = 0.5 * (grad.covariance + grad.covariance.transpose());
    // cov2d = T Sigma T^T
    const Mat3 g_sigma = t.transpose() * gc * t;
    const Eigen::Matrix<double, 2, 3> g_t = 2.0 * gc * t * sigma;
    const Eigen::Matrix<double, 2, 3> g_jac = g_t * cam.rotation.transpose();

    // mean = (fx x / z + cx, fy y / z + cy): its Jacobian is `jac` itself.
    Vec3 g_pc = jac.transpose() * grad.mean;
    g_pc.x() += g_jac(0, 2) * (-cam.fx * iz2);
    g_pc.y() += g_jac(1, 2) * (-cam.fy * iz2);
    g_pc.z() += g_jac(0, 0) * (-cam.fx * iz2) + g_jac(0, 2) * (2.0 * cam.fx * x * iz3) +
                g_jac(1, 1) * (-cam.fy * iz2) + g_jac(1, 2) * (2.0 * cam.fy * y * iz3);

    PrimitiveGrad out;
    out.position = cam.rotation.transpose() * g_pc;
    // Sigma = R S^2 R^T
    const Mat3 g_r = 2.0 * g_sigma * r * s2.asDiagonal();
    out.rotation = quat_to_rotmat_backward(g.rotation, g_r);
    const Mat3 rtgr = r.transpose() * g_sigma * r;
    for (int k = 0; k < 3; ++k) out.scale[k] = 2.0 * g.scale[k] * rtgr(k, k);
    out.opacity = grad.opacity;
    out.color = grad.color;
    return out;
}

RenderOutput rasterize(std::span<const Splat2D> splats, const Camera& cam, const Vec3& background) {
    const int width = cam.width;
    const int height = cam.height;
    auto state = std::make_shared<RasterState>();
    state->width = width;
    state->height = height;
    state->tiles_x = (width + kTileSize - 1) / kTileSize;
    state->tiles_y = (height + kTileSize - 1) / kTileSize;
    state->background = background;

    const std::size_t n = splats.size();
    state->prepared.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!splat_finite(splats[i])) throw ValidationError("non-finite splat passed to rasterize");
        state->prepared[i] = prepare(splats[i], width, height);
    }

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return splats[a].depth < splats[b].depth;
    });

    // Bin in depth order so every tile list is already front-to-back.
    const int tile_count = state->tiles_x * state->tiles_y;
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(tile_count) + 1, 0);
    auto tile_range = [&](const PreparedSplat& p, int& tx0, int& tx1, int& ty0, int& ty1) {
        tx0 = p.xmin / kTileSize;
        tx1 = p.xmax / kTileSize;
        ty0 = p.ymin / kTileSize;
        ty1 = p.ymax / kTileSize;
    };
    for (std::uint32_t s : order) {
        const auto& p = state->prepared[s];
        if (p.xmin > p.xmax || p.ymin > p.ymax) continue;
        int tx0, tx1, ty0, ty1;
        tile_range(p, tx0, tx1, ty0, ty1);
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) ++counts[ty * state->tiles_x + tx + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    state->tile_offset = counts;
    state->tile_entries.resize(counts.back());
    std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
    for (std::uint32_t s : order) {
        const auto& p = state->prepared[s];
        if (p.xmin > p.xmax || p.ymin > p.ymax) continue;
        int tx0, tx1, ty0, ty1;
        tile_range(p, tx0, tx1, ty0, ty1);
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) state->tile_entries[cursor[ty * state->tiles_x + tx]++] = s;
    }

    RenderOutput out;
    out.image = Image(height, width);
    out.alpha.assign(static_cast<std::size_t>(width) * height, 0.0);
    state->contributions.resize(static_cast<std::size_t>(tile_count));

#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < tile_count; ++t) {
        const int x0 = (t % state->tiles_x) * kTileSize;
        const int y0 = (t / state->tiles_x) * kTileSize;
        const int x1 = std::min(x0 + kTileSize, width);
        const int y1 = std::min(y0 + kTileSize, height);
        double acc[kTileSize * kTileSize][3] = {};
        double trans[kTileSize * kTileSize];
        std::fill(std::begin(trans), std::end(trans), 1.0);
        auto& recs = state->contributions[t];

        for (std::uint32_t e = state->tile_offset[t]; e < state->tile_offset[t + 1]; ++e) {
            const auto& p = state->prepared[state->tile_entries[e]];
            const int xa = std::max(p.xmin, x0), xb = std::min(p.xmax, x1 - 1);
            const int ya = std::max(p.ymin, y0), yb = std::min(p.ymax, y1 - 1);
            for (int py = ya; py <= yb; ++py) {
                const double dy = py - p.mean.y();
                for (int px = xa; px <= xb; ++px) {
                    const double dx = px - p.mean.x();
                    const double q = p.conic_xx * dx * dx + 2.0 * p.conic_xy * dx * dy +
                                     p.conic_yy * dy * dy;
                    if (q > p.q_limit) continue;
                    const double gauss = std::exp(-0.5 * q);
                    const double alpha = p.opacity * gauss;
                    if (alpha < kMinAlpha) continue;
                    const int l = (py - y0) * kTileSize + (px - x0);
                    const double tb = trans[l];
                    const double w = alpha * tb;
                    acc[l][0] += p.color[0] * w;
                    acc[l][1] += p.color[1] * w;
                    acc[l][2] += p.color[2] * w;
                    trans[l] = tb * (1.0 - alpha);
                    recs.push_back({e, static_cast<std::uint32_t>(l), gauss, tb});
                }
            }
        }
        for (int py = y0; py < y1; ++py) {
            for (int px = x0; px < x1; ++px) {
                const int l = (py - y0) * kTileSize + (px - x0);
                for (int c = 0; c < 3; ++c) {
                    out.image.at(py, px, c) = acc[l][c] + trans[l] * background[c];
                }
                out.alpha[static_cast<std::size_t>(py) * width + px] = 1.0 - trans[l];
            }
        }
    }
    out.records = std::move(state);
    return out;
}

std::vector<SplatGrad> rasterize_backward(const RenderOutput& output, const Image& grad_image) {
    if (!output.records) throw ValidationError("rasterize_backward needs the forward records");
    const RasterState& st = *output.records;
    if (grad_image.height() != st.height || grad_image.width() != st.width) {
        throw ValidationError("upstream gradient shape does not match the render");
    }
    const int tile_count = st.tiles_x * st.tiles_y;
    // Per-entry partials: mean(2), conic xx/xy/yy (3), opacity, color(3).
    constexpr int kG = 9;
    std::vector<double> entry_grad(st.tile_entries.size() * kG, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < tile_count; ++t) {
        const int x0 = (t % st.tiles_x) * kTileSize;
        const int y0 = (t / st.tiles_x) * kTileSize;
        double behind[kTileSize * kTileSize][3];
        for (auto& b : behind) {
            b[0] = st.background[0];
            b[1] = st.background[1];
            b[2] = st.background[2];
        }
        const auto& recs = st.contributions[t];
        for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
            const auto& p = st.prepared[st.tile_entries[it->entry]];
            const int l = static_cast<int>(it->pixel);
            const int px = x0 + l % kTileSize;
            const int py = y0 + l / kTileSize;
            const double g0 = grad_image.at(py, px, 0);
            const double g1 = grad_image.at(py, px, 1);
            const double g2 = grad_image.at(py, px, 2);
            const double gauss = it->gauss;
            const double tb = it->transmittance;
            const double alpha = p.opacity * gauss;
            double* eg = &entry_grad[static_cast<std::size_t>(it->entry) * kG];

            const double w = alpha * tb;
            eg[6] += g0 * w;
            eg[7] += g1 * w;
            eg[8] += g2 * w;
            double* b = behind[l];
            const double d_alpha = tb * (g0 * (p.color[0] - b[0]) + g1 * (p.color[1] - b[1]) +
                                         g2 * (p.color[2] - b[2]));
            b[0] = alpha * p.color[0] + (1.0 - alpha) * b[0];
            b[1] = alpha * p.color[1] + (1.0 - alpha) * b[1];
            b[2] = alpha * p.color[2] + (1.0 - alpha) * b[2];

            eg[5] += gauss * d_alpha;
            const double d_gauss = p.opacity * d_alpha;
            const double d_q = -0.5 * gauss * d_gauss;
            const double dx = px - p.mean.x();
            const double dy = py - p.mean.y();
            // q = d^T C d,  d = pixel - mean
            eg[0] += -2.0 * d_q * (p.conic_xx * dx + p.conic_xy * dy);
            eg[1] += -2.0 * d_q * (p.conic_xy * dx + p.conic_yy * dy);
            eg[2] += d_q * dx * dx;
            eg[3] += d_q * dx * dy;
            eg[4] += d_q * dy * dy;
        }
    }

    // Fixed-order reduction: entries are visited tile by tile.
    const std::size_t n = st.prepared.size();
    std::vector<double> acc(n * kG, 0.0);
    for (std::size_t e = 0; e < st.tile_entries.size(); ++e) {
        const std::size_t s = st.tile_entries[e];
        for (int k = 0; k < kG; ++k) acc[s * kG + k] += entry_grad[e * kG + k];
    }

    std::vector<SplatGrad> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double* a = &acc[s * kG];
        const auto& p = st.prepared[s];
        Mat2 conic;
        conic << p.conic_xx, p.conic_xy, p.conic_xy, p.conic_yy;
        Mat2 g_conic;
        g_conic << a[2], a[3], a[3], a[4];
        out[s].mean = Vec2(a[0], a[1]);
        out[s].covariance = -conic * g_conic * conic;
        out[s].opacity = a[5];
        out[s].color = Vec3(a[6], a[7], a[8]);
    }
    return out;
}

SceneRender render(std::span<const GaussianPrimitive> primitives, const Camera& cam,
                   const Vec3& background) {
    SceneRender scene;
    scene.splats.reserve(primitives.size());
    scene.primitive_of_splat.reserve(primitives.size());
    for (std::size_t i = 0; i < primitives.size(); ++i) {
        if (auto s = project(primitives[i], cam)) {
            scene.splats.push_back(*s);
            scene.primitive_of_splat.push_back(static_cast<int>(i));
        }
    }
    scene.raster = rasterize(scene.splats, cam, background);
    return scene;
}

std::vector<PrimitiveGrad> render_backward(const SceneRender& scene,
                                           std::span<const GaussianPrimitive> primitives,
                                           const Camera& cam, const Image& grad_image) {
    const auto splat_grads = rasterize_backward(scene.raster, grad_image);
    std::vector<PrimitiveGrad> out(primitives.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(splat_grads.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const int i = scene.primitive_of_splat[s];
        out[i] = project_backward(primitives[i], cam, splat_grads[s]);
    }
    return out;
}

}  // namespace drape
