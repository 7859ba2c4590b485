#include "drape/synthdata.hpp"

#include "drape/flow.hpp"
#include "drape/image_io.hpp"
#include "drape/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace drape {

namespace {

constexpr double kPi = std::numbers::pi;

enum class Chart { none, torso, left_arm, right_arm, left_leg, right_leg, head };

struct ChartTexel {
    Chart chart = Chart::none;
    double a = 0.0;  // around, [0,1)
    double b = 0.0;  // along, [0,1]
    int row = 0;     // chart-local
    int col = 0;
    int rows = 1;
    int cols = 1;
};

ChartTexel locate_texel(int row, int col, int size) {
    const int q = size / 4;
    ChartTexel t;
    auto set = [&](Chart c, int r0, int c0, int rows, int cols) {
        t.chart = c;
        t.row = row - r0;
        t.col = col - c0;
        t.rows = rows;
        t.cols = cols;
        t.a = (t.col + 0.5) / cols;
        t.b = (t.row + 0.5) / rows;
    };
    if (row < 2 * q) {
        if (col < 2 * q) set(Chart::torso, 0, 0, 2 * q, 2 * q);
        else if (col < 3 * q) set(Chart::left_arm, 0, 2 * q, 2 * q, q);
        else set(Chart::right_arm, 0, 3 * q, 2 * q, q);
    } else {
        if (col < q) set(Chart::left_leg, 2 * q, 0, 2 * q, q);
        else if (col < 2 * q) set(Chart::right_leg, 2 * q, q, 2 * q, q);
        else if (col < 3 * q && row < 3 * q) set(Chart::head, 2 * q, 2 * q, q, q);
    }
    return t;
}

struct Surface {
    Vec3 position;
    Vec3 normal;
};

Surface chart_surface(Chart chart, double a, double b) {
    const double phi = 2.0 * kPi * a;
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    switch (chart) {
        case Chart::torso: {
            const double rx = 0.16, rz = 0.11;
            return {{rx * s, 1.48 - 0.62 * b, rz * c}, Vec3(s / rx, 0.0, c / rz).normalized()};
        }
        case Chart::left_arm:
        case Chart::right_arm: {
            const double side = chart == Chart::left_arm ? 1.0 : -1.0;
            const double r = 0.045;
            return {{side * 0.24 + r * s, 1.45 - 0.53 * b, r * c}, Vec3(s, 0.0, c)};
        }
        case Chart::left_leg:
        case Chart::right_leg: {
            const double side = chart == Chart::left_leg ? 1.0 : -1.0;
            const double r = 0.075;
            return {{side * 0.085 + r * s, 0.86 - 0.78 * b, r * c}, Vec3(s, 0.0, c)};
        }
        case Chart::head: {
            const double theta = kPi * b;
            const Vec3 n(std::sin(theta) * s, std::cos(theta), std::sin(theta) * c);
            return {Vec3(0.0, 1.62, 0.0) + 0.11 * n, n};
        }
        case Chart::none: break;
    }
    return {Vec3::Zero(), Vec3::UnitZ()};
}

struct Segment {
    Vec3 a, b;
    int joint;
};

double segment_distance(const Vec3& p, const Segment& s) {
    const Vec3 d = s.b - s.a;
    const double t = std::clamp((p - s.a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (p - (s.a + t * d)).norm();
}

std::vector<Segment> chart_bones(Chart chart) {
    const Segment root{{0, 0.95, 0}, {0, 1.25, 0}, kRoot};
    const Segment spine{{0, 1.25, 0}, {0, 1.55, 0}, kSpine};
    switch (chart) {
        case Chart::torso: return {root, spine};
        case Chart::left_arm: return {{{0.2, 1.47, 0}, {0.24, 0.92, 0}, kLeftArm}, spine};
        case Chart::right_arm: return {{{-0.2, 1.47, 0}, {-0.24, 0.92, 0}, kRightArm}, spine};
        case Chart::left_leg: return {{{0.085, 0.9, 0}, {0.085, 0.08, 0}, kLegs}, root};
        case Chart::right_leg: return {{{-0.085, 0.9, 0}, {-0.085, 0.08, 0}, kLegs}, root};
        case Chart::head: return {{{0, 1.55, 0}, {0, 1.73, 0}, kHead}, spine};
        case Chart::none: break;
    }
    return {};
}

Vec3 clamp_color(const Vec3& c) { return c.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace

Vec3 GarmentSpec::color_at(int row, int col) const {
    const int half = std::max(1, period / 2);
    switch (pattern) {
        case Pattern::solid: return color_a;
        case Pattern::stripes: return (row / half) % 2 == 0 ? color_a : color_b;
        case Pattern::checker: return ((row / half) + (col / half)) % 2 == 0 ? color_a : color_b;
    }
    return color_a;
}

void GarmentSpec::validate(const PositionMap& layout) const {
    if (mask.size() != layout.texel_count()) throw ValidationError("garment mask does not match the template");
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] && !layout.is_valid(i)) throw ValidationError("garment mask covers invalid texels");
    }
    for (const Vec3& c : {color_a, color_b}) {
        if ((c.array() < 0.0).any() || (c.array() > 1.0).any()) throw ValidationError("garment colors outside [0,1]");
    }
    if (period < 2) throw ValidationError("garment pattern period must be >= 2");
}

Subject generate_subject(std::uint64_t seed, int uv_size) {
    if (uv_size < 32 || uv_size % 16 != 0) throw ValidationError("uv size must be a multiple of 16 and >= 32");
    Subject s;
    Skeleton& sk = s.rig.skeleton;
    sk.parent = {-1, kRoot, kSpine, kSpine, kSpine, kRoot};
    sk.rest_offset = {{0, 0.95, 0}, {0, 0.3, 0}, {0, 0.3, 0}, {0.2, 0.22, 0}, {-0.2, 0.22, 0}, {0, -0.05, 0}};

    const int n = uv_size;
    PositionMap& tmpl = s.rig.canonical;
    tmpl = PositionMap(n, n);
    s.rig.weights = SkinWeights(n, n, kJointCount);
    const std::size_t texels = tmpl.texel_count();
    s.canonical.assign(texels, GaussianPrimitive{});
    s.normal.assign(texels, Vec3::UnitZ());
    s.chart_u.assign(texels, 0.0);
    s.chart_v.assign(texels, 0.0);
    s.garment.mask.assign(texels, 0);
    s.garment.pattern = Pattern::stripes;
    s.garment.color_a = {0.75, 0.2, 0.2};
    s.garment.color_b = {0.93, 0.9, 0.82};
    s.garment.period = 8;

    std::mt19937_64 rng(derive_seed(seed, 1));
    std::uniform_real_distribution<double> noise(-0.03, 0.03);

    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            const std::size_t i = static_cast<std::size_t>(row) * n + col;
            const ChartTexel t = locate_texel(row, col, n);
            // Draw noise for every texel so the stream does not depend on the layout.
            const Vec3 jitter(noise(rng), noise(rng), noise(rng));
            if (t.chart == Chart::none) continue;
            const Surface surf = chart_surface(t.chart, t.a, t.b);
            tmpl.position[i] = surf.position;
            tmpl.valid[i] = 1;
            s.normal[i] = surf.normal;
            s.chart_u[i] = 2.0 * kPi * t.a;
            s.chart_v[i] = t.b;

            // Tangent frame and texel footprint from the chart derivatives.
            const double da = 0.5 / t.cols;
            const double db = 0.5 / t.rows;
            const Vec3 du = chart_surface(t.chart, t.a + da, t.b).position -
                            chart_surface(t.chart, t.a - da, t.b).position;
            const Vec3 dv = chart_surface(t.chart, t.a, t.b + db).position -
                            chart_surface(t.chart, t.a, t.b - db).position;
            const Vec3 nrm = surf.normal;
            const Vec3 e0 = (du - nrm * nrm.dot(du)).normalized();
            const Vec3 e1 = nrm.cross(e0);
            Mat3 frame;
            frame.col(0) = e0;
            frame.col(1) = e1;
            frame.col(2) = nrm;
            GaussianPrimitive& g = s.canonical[i];
            g.position = surf.position;
            g.rotation = Quat::from_rotmat(frame);
            g.scale = Vec3(std::max(0.6 * du.norm(), 0.004), std::max(0.6 * dv.norm(), 0.004), 0.004);
            g.opacity = 0.98;

            Vec3 color;
            switch (t.chart) {
                case Chart::torso:
                    s.garment.mask[i] = 1;
                    color = s.garment.color_at(t.row, t.col);
                    break;
                case Chart::left_arm:
                case Chart::right_arm: color = Vec3(0.87, 0.68, 0.56) + jitter; break;
                case Chart::left_leg:
                case Chart::right_leg: color = Vec3(0.2, 0.24, 0.38) + jitter; break;
                case Chart::head:
                    color = (t.b < 0.35 ? Vec3(0.25, 0.15, 0.1) : Vec3(0.87, 0.68, 0.56)) + jitter;
                    break;
                case Chart::none: break;
            }
            g.color = clamp_color(color);

            // Normalized inverse-square distance to the chart's bones.
            auto w = s.rig.weights.of(i);
            const auto bones = chart_bones(t.chart);
            double total = 0.0;
            for (const Segment& bone : bones) {
                const double d = segment_distance(surf.position, bone);
                const double v = 1.0 / (d * d + 1e-4);
                w[bone.joint] += v;
                total += v;
            }
            for (double& v : w) v /= total;
        }
    }
    return s;
}

GarmentSpec target_garment(const Subject& subject) {
    GarmentSpec g;
    g.mask = subject.garment.mask;
    g.pattern = Pattern::checker;
    g.color_a = {0.15, 0.45, 0.35};
    g.color_b = {0.9, 0.8, 0.3};
    // Squares of a quarter of the grid stay several pixels wide on screen,
    // wider than the injected jitter.
    g.period = std::max(4, subject.rig.canonical.width / 2);
    return g;
}

double spine_twist(const Pose& pose) {
    const Quat& q = pose.local_rotation.at(kSpine);
    return 2.0 * std::atan2(q.y, q.w);
}

std::vector<GaussianPrimitive> subject_primitives(const Subject& subject, const Pose& pose,
                                                  const GarmentSpec* garment) {
    const AvatarRig& rig = subject.rig;
    const PositionMap& tmpl = rig.canonical;
    const double tau = spine_twist(pose);
    PositionMap deformed = tmpl;
    std::vector<GaussianPrimitive> canon = subject.canonical;
    for (std::size_t i = 0; i < tmpl.texel_count(); ++i) {
        if (!tmpl.is_valid(i) || !subject.garment.mask[i]) continue;
        const int row = static_cast<int>(i) / tmpl.width;
        const int col = static_cast<int>(i) % tmpl.width;
        const double phi = subject.chart_u[i];
        const double bump = std::sin(kPi * subject.chart_v[i]);
        // Pose-dependent cloth response: the mid torso over-rotates with the
        // spine twist, sways along the normal and picks up moving wrinkles.
        const double beta = 0.5 * tau * bump;
        const Mat3 rot = quat_to_rotmat(Quat::from_axis_angle(Vec3::UnitY(), beta));
        Vec3 p = rot * tmpl.position[i];
        p += 0.012 * std::sin(2.0 * phi + 5.0 * tau) * bump * subject.normal[i];
        deformed.position[i] = p;
        GaussianPrimitive& g = canon[i];
        g.position = p;
        g.rotation = Quat::from_axis_angle(Vec3::UnitY(), beta) * g.rotation;
        const double shade = 1.0 - 0.25 * (0.5 + 0.5 * std::sin(4.0 * phi - 8.0 * tau)) * bump;
        const Vec3 base = garment ? garment->color_at(row, col) : g.color;
        g.color = clamp_color(base * shade);
    }
    const auto transforms = skinning_transforms(rig.skeleton, pose);
    const LbsResult lbs = lbs_transform(deformed, rig.weights, transforms);
    std::vector<GaussianPrimitive> out;
    out.reserve(tmpl.valid_count());
    for (std::size_t i = 0; i < tmpl.texel_count(); ++i) {
        if (!tmpl.is_valid(i)) continue;
        GaussianPrimitive g = canon[i];
        g.position = lbs.posed.position[i];
        g.rotation = lbs.field.rotation_quat[i] * g.rotation;
        out.push_back(g);
    }
    return out;
}

std::vector<Pose> pose_sequence(int count) {
    if (count < 1) throw ValidationError("pose count must be >= 1");
    std::vector<Pose> poses;
    for (int i = 0; i < count; ++i) {
        const double psi = 2.0 * kPi * i / count;
        Pose p = Pose::identity(kJointCount);
        const double swing = 0.5 * std::sin(psi);
        p.local_rotation[kLeftArm] = Quat::from_axis_angle(Vec3::UnitX(), swing);
        p.local_rotation[kRightArm] = Quat::from_axis_angle(Vec3::UnitX(), -swing);
        p.local_rotation[kSpine] = Quat::from_axis_angle(Vec3::UnitY(), 0.35 * std::sin(psi + 1.0));
        p.local_rotation[kLegs] = Quat::from_axis_angle(Vec3::UnitX(), 0.1 * std::sin(psi));
        poses.push_back(p);
    }
    return poses;
}

std::vector<Camera> camera_ring(int views, int resolution, double radius, double focal) {
    if (views < 1) throw ValidationError("view count must be >= 1");
    if (resolution < 32) throw ValidationError("resolution must be >= 32");
    std::vector<Camera> cams;
    for (int v = 0; v < views; ++v) {
        const double az = 2.0 * kPi * v / views + 0.35;
        const Vec3 eye(radius * std::sin(az), 1.0, radius * std::cos(az));
        cams.push_back(Camera::look_at(eye, Vec3(0.0, 0.92, 0.0), Vec3::UnitY(), focal, resolution, resolution));
    }
    return cams;
}

std::vector<Image> render_dataset(const Subject& subject, std::span<const Camera> cameras,
                                  std::span<const Pose> poses, const Vec3& background,
                                  const GarmentSpec* garment) {
    std::vector<Image> frames;
    frames.reserve(cameras.size() * poses.size());
    for (const Pose& pose : poses) {
        const auto prims = subject_primitives(subject, pose, garment);
        for (const Camera& cam : cameras) frames.push_back(render(prims, cam, background).raster.image);
    }
    return frames;
}

std::vector<double> feather_mask(const std::vector<std::uint8_t>& mask, int height, int width,
                                 double radius) {
    // The ramp starts one pixel inside the boundary, so the outermost garment
    // ring stays fixed and bilinear taps never straddle the mask edge.
    std::vector<double> out(mask.size(), 0.0);
    const int r = static_cast<int>(std::ceil(radius)) + 1;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (!mask[static_cast<std::size_t>(y) * width + x]) continue;
            double best = radius + 1.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    const bool outside = yy < 0 || yy >= height || xx < 0 || xx >= width ||
                                         !mask[static_cast<std::size_t>(yy) * width + xx];
                    if (outside) best = std::min(best, std::sqrt(double(dx * dx + dy * dy)));
                }
            }
            out[static_cast<std::size_t>(y) * width + x] = std::clamp((best - 1.0) / radius, 0.0, 1.0);
        }
    }
    return out;
}

FlowField smooth_jitter(int height, int width, const std::vector<double>& weight, double magnitude,
                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.5, 1.0), wave(48.0, 96.0), angle(0.0, 2.0 * kPi);
    struct Wave {
        double a, kx, ky, phase;
    };
    std::array<std::array<Wave, 3>, 2> waves{};
    for (auto& axis : waves) {
        for (auto& w : axis) {
            w.a = amp(rng);
            const double lambda = wave(rng);
            const double th = angle(rng);
            w.kx = 2.0 * kPi * std::cos(th) / lambda;
            w.ky = 2.0 * kPi * std::sin(th) / lambda;
            w.phase = angle(rng);
        }
    }
    FlowField f(height, width);
    double peak = 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double m = weight[static_cast<std::size_t>(y) * width + x];
            if (m == 0.0) continue;
            double v[2] = {0.0, 0.0};
            for (int c = 0; c < 2; ++c)
                for (const Wave& w : waves[c]) v[c] += w.a * std::sin(w.kx * x + w.ky * y + w.phase);
            f.dx(y, x) = m * v[0];
            f.dy(y, x) = m * v[1];
            peak = std::max(peak, std::hypot(f.dx(y, x), f.dy(y, x)));
        }
    }
    if (peak > 0.0) {
        const double s = magnitude / peak;
        for (double& v : f.data()) v *= s;
    }
    return f;
}

FlowField invert_flow(const FlowField& jitter, int iterations) {
    const int h = jitter.height();
    const int w = jitter.width();
    FlowField f(h, w);
    // Sample J at x + F with bilinear interpolation (border clamp), reusing warp()
    // on a 3-channel image holding (Jx, Jy, 0).
    Image jimg(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            jimg.at(y, x, 0) = jitter.dx(y, x);
            jimg.at(y, x, 1) = jitter.dy(y, x);
        }
    constexpr double kDamping = 0.5;
    for (int it = 0; it < iterations; ++it) {
        const Image s = warp(jimg, f);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                f.dx(y, x) = (1.0 - kDamping) * f.dx(y, x) - kDamping * s.at(y, x, 0);
                f.dy(y, x) = (1.0 - kDamping) * f.dy(y, x) - kDamping * s.at(y, x, 1);
            }
    }
    return f;
}

DegradeResult degrade(const Subject& subject, const GarmentSpec& garment,
                      std::span<const Camera> cameras, std::span<const Pose> poses,
                      std::span<const std::pair<int, int>> frames, const Vec3& background,
                      const DegradeOptions& options) {
    if (!(options.magnitude >= 0.0)) throw ValidationError("jitter magnitude must be >= 0");
    garment.validate(subject.rig.canonical);
    DegradeResult out;
    int cached_pose = -1;
    std::vector<GaussianPrimitive> tryon, coverage;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto [pi, vi] = frames[f];
        if (pi < 0 || pi >= static_cast<int>(poses.size()) || vi < 0 || vi >= static_cast<int>(cameras.size())) {
            throw ValidationError("degrade: frame index out of range");
        }
        if (pi != cached_pose) {
            tryon = subject_primitives(subject, poses[pi], &garment);
            coverage = tryon;
            std::size_t k = 0;
            for (std::size_t i = 0; i < subject.rig.canonical.texel_count(); ++i) {
                if (!subject.rig.canonical.is_valid(i)) continue;
                coverage[k++].color = subject.garment.mask[i] ? Vec3::Ones() : Vec3::Zero();
            }
            cached_pose = pi;
        }
        const Camera& cam = cameras[vi];
        const int h = cam.height, w = cam.width;
        Image ideal = render(tryon, cam, background).raster.image;
        const Image cov = render(coverage, cam, Vec3::Zero()).raster.image;

        JitterRecord rec;
        rec.garment.assign(static_cast<std::size_t>(h) * w, 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) rec.garment[static_cast<std::size_t>(y) * w + x] = cov.at(y, x, 0) > 0.5;
        const auto weight = feather_mask(rec.garment, h, w);
        const std::uint64_t frame_seed = derive_seed(options.seed, 1000 + f);
        rec.warp = smooth_jitter(h, w, weight, options.magnitude, frame_seed);
        rec.inverse = invert_flow(rec.warp);
        Image d = warp(ideal, rec.warp);
        if (options.color_jitter) {
            std::mt19937_64 rng(derive_seed(frame_seed, 7));
            std::uniform_real_distribution<double> gain(0.9, 1.1), offset(-0.03, 0.03);
            for (int c = 0; c < 3; ++c) rec.gain[c] = gain(rng);
            for (int c = 0; c < 3; ++c) rec.offset[c] = offset(rng);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int c = 0; c < 3; ++c)
                        d.at(y, x, c) = std::clamp(rec.gain[c] * d.at(y, x, c) + rec.offset[c], 0.0, 1.0);
        }
        out.degraded.push_back(quantize8(d));
        out.ideal.push_back(quantize8(ideal));
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::vector<int> subsample_poses(int count, int k) {
    if (count < 1 || k < 1 || k > count) throw ValidationError("subsample_poses: need 1 <= k <= count");
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        idx[i] = static_cast<int>(static_cast<long long>(i) * count / k);
    }
    return idx;
}

}  // namespace drape
