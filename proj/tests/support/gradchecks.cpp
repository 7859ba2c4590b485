#include "gradchecks.hpp"

#include "fd.hpp"
#include "scenes.hpp"

#include "drape/deformer.hpp"
#include "drape/discriminator.hpp"
#include "drape/flow.hpp"
#include "drape/losses.hpp"
#include "drape/renderer.hpp"
#include "drape/skeleton.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace drape::testing {

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec random_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (double& x : v) x = u(rng);
    return v;
}

// Compares `analytic` with central differences of f at x, on all
// coordinates or on a random subset of at most `max_coords`.
double compare(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& analytic, std::mt19937_64& rng,
               int max_coords = 0) {
    std::vector<std::size_t> coords(x.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords > 0 && coords.size() > static_cast<std::size_t>(max_coords)) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(max_coords); ++i) {
            const std::size_t j = i + rng() % (coords.size() - i);
            std::swap(coords[i], coords[j]);
        }
        coords.resize(static_cast<std::size_t>(max_coords));
    }
    Vec a, n;
    Vec xv = x;
    for (std::size_t c : coords) {
        const double x0 = xv[c];
        const double h = 1e-6 * std::max(1.0, std::abs(x0));
        xv[c] = x0 + h;
        const double fp = f(xv);
        xv[c] = x0 - h;
        const double fm = f(xv);
        xv[c] = x0;
        n.push_back((fp - fm) / (2.0 * h));
        a.push_back(analytic[c]);
    }
    return relative_error(a, n);
}

Image vec_image(const Vec& v, std::size_t offset, int h, int w) {
    Image im(h, w);
    std::copy_n(v.begin() + offset, im.size(), im.data().begin());
    return im;
}

// ---- primitives <-> flat vectors (14 values each) ----

constexpr int kPrimValues = 14;

Vec pack(const std::vector<GaussianPrimitive>& prims) {
    Vec v;
    for (const auto& g : prims) {
        v.insert(v.end(), {g.position.x(), g.position.y(), g.position.z(), g.rotation.w, g.rotation.x,
                           g.rotation.y, g.rotation.z, g.scale.x(), g.scale.y(), g.scale.z(), g.opacity,
                           g.color.x(), g.color.y(), g.color.z()});
    }
    return v;
}

std::vector<GaussianPrimitive> unpack(const Vec& v) {
    std::vector<GaussianPrimitive> out(v.size() / kPrimValues);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double* p = v.data() + i * kPrimValues;
        auto& g = out[i];
        g.position = Vec3(p[0], p[1], p[2]);
        g.rotation = Quat{p[3], p[4], p[5], p[6]};
        g.scale = Vec3(p[7], p[8], p[9]);
        g.opacity = p[10];
        g.color = Vec3(p[11], p[12], p[13]);
    }
    return out;
}

Vec pack_grads(const std::vector<PrimitiveGrad>& grads) {
    Vec v;
    for (const auto& g : grads) {
        v.insert(v.end(), {g.position.x(), g.position.y(), g.position.z(), g.rotation[0], g.rotation[1],
                           g.rotation[2], g.rotation[3], g.scale.x(), g.scale.y(), g.scale.z(), g.opacity,
                           g.color.x(), g.color.y(), g.color.z()});
    }
    return v;
}

// ---- tiny articulated rig ----

struct TinyRig {
    AvatarRig rig;
    Pose pose;
    SkinningField field;
    PositionMap posed;
};

TinyRig tiny_rig(std::mt19937_64& rng, int h = 3, int w = 4) {
    std::uniform_real_distribution<double> u(-0.3, 0.3), ang(-0.6, 0.6), wt(0.05, 1.0);
    TinyRig t;
    t.rig.skeleton.parent = {-1, 0, 1};
    t.rig.skeleton.rest_offset = {Vec3(0.0, -0.1, 0.0), Vec3(0.0, 0.2, 0.0), Vec3(0.1, 0.1, 0.0)};
    t.rig.canonical = PositionMap(h, w);
    for (std::size_t i = 0; i < t.rig.canonical.texel_count(); ++i) {
        t.rig.canonical.valid[i] = i != 5;
        t.rig.canonical.position[i] = Vec3(u(rng), u(rng), u(rng));
    }
    t.rig.weights = SkinWeights(h, w, 3);
    for (std::size_t i = 0; i < t.rig.canonical.texel_count(); ++i) {
        auto ws = t.rig.weights.of(i);
        double s = 0.0;
        for (double& x : ws) s += (x = wt(rng));
        for (double& x : ws) x /= s;
    }
    t.pose = Pose::identity(3);
    for (auto& q : t.pose.local_rotation) q = Quat::from_axis_angle(Vec3(u(rng), u(rng), u(rng)).normalized(), ang(rng));
    t.pose.root_translation = Vec3(u(rng), u(rng), u(rng)) * 0.2;
    LbsResult lbs = lbs_transform(t.rig.canonical, t.rig.weights, skinning_transforms(t.rig.skeleton, t.pose));
    t.field = std::move(lbs.field);
    t.posed = std::move(lbs.posed);
    return t;
}

// Branch raw values and offsets that keep opacity and color strictly inside
// (0, 1), away from the clamps.
BranchField random_branch(std::mt19937_64& rng, const PositionMap& layout) {
    std::uniform_real_distribution<double> small(-0.05, 0.05), logit(-1.0, 1.0), qn(-0.3, 0.3), ls(-0.4, 0.4);
    BranchField b = BranchField::initial(Branch::tar, layout, 0.1, 0.5, Vec3::Constant(0.5));
    for (std::size_t i = 0; i < layout.texel_count(); ++i) {
        if (!layout.is_valid(i)) continue;
        double* t = b.raw.texel(i);
        for (int k = 0; k < 3; ++k) t[kRawPosition + k] = small(rng);
        t[kRawRotation] = 1.0 + qn(rng);
        for (int k = 1; k < 4; ++k) t[kRawRotation + k] = qn(rng);
        for (int k = 0; k < 3; ++k) t[kRawScale + k] = std::log(0.1) + ls(rng);
        t[kRawOpacity] = logit(rng);
        for (int k = 0; k < 3; ++k) t[kRawColor + k] = logit(rng);
    }
    return b;
}

RawGrid random_offsets(std::mt19937_64& rng, const PositionMap& layout) {
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    RawGrid o(layout.height, layout.width);
    for (std::size_t i = 0; i < layout.texel_count(); ++i) {
        if (!layout.is_valid(i)) continue;
        for (int c = 0; c < kRawChannels; ++c) o.texel(i)[c] = u(rng);
    }
    return o;
}

// Flat vector over valid texels of a raw grid.
Vec gather(const RawGrid& g, const std::vector<std::uint8_t>& valid) {
    Vec v;
    for (std::size_t i = 0; i < g.texel_count(); ++i)
        if (valid[i]) v.insert(v.end(), g.texel(i), g.texel(i) + kRawChannels);
    return v;
}

void scatter(const Vec& v, std::size_t offset, RawGrid& g, const std::vector<std::uint8_t>& valid) {
    for (std::size_t i = 0; i < g.texel_count(); ++i) {
        if (!valid[i]) continue;
        std::copy_n(v.begin() + offset, kRawChannels, g.texel(i));
        offset += kRawChannels;
    }
}

}  // namespace

GradCheck check_projection(int instances, std::uint64_t seed) {
    GradCheck r{"projection", instances, 0.0};
    std::mt19937_64 rng(seed);
    const Camera cam = test_camera();
    for (int n = 0; n < instances; ++n) {
        auto prims = random_primitives(rng, 1);
        prims[0].rotation = Quat{prims[0].rotation.w * 1.3, prims[0].rotation.x, prims[0].rotation.y * 0.7,
                                 prims[0].rotation.z};  // off the unit sphere on purpose
        const Vec wv = random_vec(rng, 10);
        auto functional = [&](const Splat2D& s) {
            return wv[0] * s.mean.x() + wv[1] * s.mean.y() + wv[2] * s.covariance(0, 0) +
                   wv[3] * s.covariance(0, 1) + wv[4] * s.covariance(1, 0) + wv[5] * s.covariance(1, 1) +
                   wv[6] * s.opacity + wv[7] * s.color.x() + wv[8] * s.color.y() + wv[9] * s.color.z();
        };
        SplatGrad g;
        g.mean = Vec2(wv[0], wv[1]);
        g.covariance << wv[2], wv[3], wv[4], wv[5];
        g.opacity = wv[6];
        g.color = Vec3(wv[7], wv[8], wv[9]);
        const Vec analytic = pack_grads({project_backward(prims[0], cam, g)});
        auto f = [&](const Vec& x) { return functional(*project(unpack(x)[0], cam)); };
        r.max_rel_error = std::max(r.max_rel_error, compare(f, pack(prims), analytic, rng));
    }
    return r;
}

GradCheck check_rasterization(int instances, std::uint64_t seed) {
    GradCheck r{"rasterization", instances, 0.0};
    std::mt19937_64 rng(seed);
    const int w = 16, h = 12;
    Camera cam = test_camera(w, h);
    for (int n = 0; n < instances; ++n) {
        const auto splats = random_splats(rng, 6, w, h);
        const Vec3 bg(0.1, 0.2, 0.3);
        const Image weight = random_image(rng, h, w, -1.0, 1.0);
        // 9 values per splat: mean x/y, covariance xx/xy/yy, opacity, color.
        Vec x;
        for (const auto& s : splats) {
            x.insert(x.end(), {s.mean.x(), s.mean.y(), s.covariance(0, 0), s.covariance(0, 1), s.covariance(1, 1),
                               s.opacity, s.color.x(), s.color.y(), s.color.z()});
        }
        auto build = [&](const Vec& v) {
            std::vector<Splat2D> out = splats;
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double* p = v.data() + i * 9;
                out[i].mean = Vec2(p[0], p[1]);
                out[i].covariance << p[2], p[3], p[3], p[4];
                out[i].opacity = p[5];
                out[i].color = Vec3(p[6], p[7], p[8]);
            }
            return out;
        };
        auto f = [&](const Vec& v) {
            const auto s = build(v);
            return dot(rasterize(s, cam, bg).image.data(), weight.data());
        };
        const RenderOutput out = rasterize(splats, cam, bg);
        const auto grads = rasterize_backward(out, weight);
        Vec analytic;
        for (const auto& g : grads) {
            analytic.insert(analytic.end(), {g.mean.x(), g.mean.y(), g.covariance(0, 0),
                                             g.covariance(0, 1) + g.covariance(1, 0), g.covariance(1, 1), g.opacity,
                                             g.color.x(), g.color.y(), g.color.z()});
        }
        r.max_rel_error = std::max(r.max_rel_error, compare(f, x, analytic, rng));
    }
    return r;
}

GradCheck check_render(int instances, std::uint64_t seed) {
    GradCheck r{"projection+rasterization", instances, 0.0};
    std::mt19937_64 rng(seed);
    const int w = 20, h = 16;
    Camera cam = test_camera(w, h);
    for (int n = 0; n < instances; ++n) {
        const auto prims = random_primitives(rng, 5);
        const Image weight = random_image(rng, h, w, -1.0, 1.0);
        const Vec3 bg(0.2, 0.1, 0.0);
        auto f = [&](const Vec& v) {
            const auto p = unpack(v);
            return dot(render(p, cam, bg).raster.image.data(), weight.data());
        };
        const SceneRender scene = render(prims, cam, bg);
        const Vec analytic = pack_grads(render_backward(scene, prims, cam, weight));
        r.max_rel_error = std::max(r.max_rel_error, compare(f, pack(prims), analytic, rng));
    }
    return r;
}

GradCheck check_warp(int instances, std::uint64_t seed) {
    GradCheck r{"warp", instances, 0.0};
    std::mt19937_64 rng(seed);
    const int h = 6, w = 7;
    for (int n = 0; n < instances; ++n) {
        const Image image = random_image(rng, h, w);
        FlowField flow(h, w);
        const Vec fv = random_vec(rng, flow.size(), -1.7, 1.7);
        flow.data() = fv;
        const Image weight = random_image(rng, h, w, -1.0, 1.0);
        Vec x = image.data();
        x.insert(x.end(), fv.begin(), fv.end());
        auto f = [&](const Vec& v) {
            FlowField fl(h, w);
            std::copy(v.begin() + image.size(), v.end(), fl.data().begin());
            return dot(warp(vec_image(v, 0, h, w), fl).data(), weight.data());
        };
        WarpOp op;
        op.forward(image, flow);
        const auto g = op.backward(weight);
        Vec analytic = g.image.data();
        analytic.insert(analytic.end(), g.flow.data().begin(), g.flow.data().end());
        r.max_rel_error = std::max(r.max_rel_error, compare(f, x, analytic, rng));
    }
    return r;
}

GradCheck check_l1(int instances, std::uint64_t seed) {
    GradCheck r{"l1_loss", instances, 0.0};
    std::mt19937_64 rng(seed);
    for (int n = 0; n < instances; ++n) {
        const Image a = random_image(rng, 5, 6), b = random_image(rng, 5, 6);
        auto f = [&](const Vec& v) { return l1_loss(vec_image(v, 0, 5, 6), b).value; };
        r.max_rel_error = std::max(r.max_rel_error, compare(f, a.data(), l1_loss(a, b).grad.data(), rng));
    }
    return r;
}

GradCheck check_perceptual(int instances, std::uint64_t seed) {
    GradCheck r{"perceptual_proxy", instances, 0.0};
    std::mt19937_64 rng(seed);
    for (int n = 0; n < instances; ++n) {
        const int h = 9 + n % 4, w = 10 + n % 3;  // odd sizes exercise the pooling crop
        const Image a = random_image(rng, h, w), b = random_image(rng, h, w);
        auto f = [&](const Vec& v) { return perceptual_proxy(vec_image(v, 0, h, w), b).value; };
        r.max_rel_error = std::max(r.max_rel_error, compare(f, a.data(), perceptual_proxy(a, b).grad.data(), rng));
    }
    return r;
}

GradCheck check_reg(int instances, std::uint64_t seed) {
    GradCheck r{"reg_loss", instances, 0.0};
    std::mt19937_64 rng(seed);
    for (int n = 0; n < instances; ++n) {
        const Vec x = random_vec(rng, 30, -3.0, 3.0);
        auto f = [&](const Vec& v) { return reg_loss(v).value; };
        r.max_rel_error = std::max(r.max_rel_error, compare(f, x, reg_loss(x).grad, rng));
    }
    return r;
}

GradCheck check_adversarial_generator(int instances, std::uint64_t seed, int max_coords) {
    GradCheck r{"adversarial_generator", instances, 0.0};
    std::mt19937_64 rng(seed);
    constexpr int P = PatchDiscriminator::kPatch;
    for (int n = 0; n < instances; ++n) {
        const PatchDiscriminator dis(rng());
        const std::vector<Image> real{random_image(rng, P, P), random_image(rng, P, P)};
        const std::vector<Image> fake{random_image(rng, P, P), random_image(rng, P, P)};
        Vec x = fake[0].data();
        x.insert(x.end(), fake[1].data().begin(), fake[1].data().end());
        auto f = [&](const Vec& v) {
            const std::vector<Image> fk{vec_image(v, 0, P, P), vec_image(v, fake[0].size(), P, P)};
            return adversarial_losses(dis, real, fk).gen;
        };
        const auto terms = adversarial_losses(dis, real, fake);
        Vec analytic = terms.grad_fake[0].data();
        analytic.insert(analytic.end(), terms.grad_fake[1].data().begin(), terms.grad_fake[1].data().end());
        r.max_rel_error = std::max(r.max_rel_error, compare(f, x, analytic, rng, max_coords));
    }
    return r;
}

GradCheck check_adversarial_discriminator(int instances, std::uint64_t seed, int max_coords) {
    GradCheck r{"adversarial_discriminator", instances, 0.0};
    std::mt19937_64 rng(seed);
    constexpr int P = PatchDiscriminator::kPatch;
    for (int n = 0; n < instances; ++n) {
        PatchDiscriminator dis(rng());
        const std::vector<Image> real{random_image(rng, P, P), random_image(rng, P, P)};
        const std::vector<Image> fake{random_image(rng, P, P)};
        const Vec x = dis.parameters();
        auto f = [&](const Vec& v) {
            PatchDiscriminator d = dis;
            d.parameters() = v;
            return adversarial_losses(d, real, fake).dis;
        };
        const auto terms = adversarial_losses(dis, real, fake);
        r.max_rel_error = std::max(r.max_rel_error, compare(f, x, terms.grad_dis, rng, max_coords));
    }
    return r;
}

GradCheck check_flow_regularizer(int instances, std::uint64_t seed) {
    GradCheck r{"flow_regularizer", instances, 0.0};
    std::mt19937_64 rng(seed);
    for (int n = 0; n < instances; ++n) {
        FlowField flow(5, 6);
        flow.data() = random_vec(rng, flow.size(), -2.0, 2.0);
        auto f = [&](const Vec& v) {
            FlowField fl(5, 6);
            fl.data() = v;
            return flow_regularizer(fl, 0.7, 0.3).value;
        };
        r.max_rel_error =
            std::max(r.max_rel_error, compare(f, flow.data(), flow_regularizer(flow, 0.7, 0.3).grad.data(), rng));
    }
    return r;
}

GradCheck check_offset_network(int instances, std::uint64_t seed) {
    GradCheck r{"offset_network", instances, 0.0};
    std::mt19937_64 rng(seed);
    for (int n = 0; n < instances; ++n) {
        const TinyRig t = tiny_rig(rng);
        OffsetNetwork net(t.posed.height, t.posed.width, 6, 2, rng());
        net.parameters() = random_vec(rng, net.parameters().size(), -0.7, 0.7);
        const Vec3 view = Vec3(0.3, -0.2, 1.0).normalized();
        RawGrid weight(t.posed.height, t.posed.width);
        weight.data = random_vec(rng, weight.data.size());
        auto f = [&](const Vec& v) {
            OffsetNetwork m = net;
            m.parameters() = v;
            return dot(m.forward(t.posed, view).data, weight.data);
        };
        OffsetNetwork::Cache cache;
        net.forward(t.posed, view, &cache);
        Vec analytic(net.parameters().size(), 0.0);
        net.backward(cache, weight, analytic);
        r.max_rel_error = std::max(r.max_rel_error, compare(f, net.parameters(), analytic, rng));
    }
    return r;
}

GradCheck check_lbs_chain(int instances, std::uint64_t seed) {
    GradCheck r{"compose+lbs", instances, 0.0};
    std::mt19937_64 rng(seed);
    const OffsetRanges ranges;
    for (int n = 0; n < instances; ++n) {
        const TinyRig t = tiny_rig(rng);
        const PositionMap& layout = t.rig.canonical;
        const BranchField branch = random_branch(rng, layout);
        const RawGrid offsets = random_offsets(rng, layout);
        const std::size_t nvalid = layout.valid_count();
        const Vec wprim = random_vec(rng, nvalid * kPrimValues);
        RawGrid wcomp(layout.height, layout.width);
        wcomp.data = random_vec(rng, wcomp.data.size());
        for (std::size_t i = 0; i < layout.texel_count(); ++i)
            if (!layout.is_valid(i)) std::fill_n(wcomp.texel(i), kRawChannels, 0.0);

        Vec x = gather(branch.raw, layout.valid);
        const Vec xo = gather(offsets, layout.valid);
        x.insert(x.end(), xo.begin(), xo.end());
        const std::size_t half = x.size() / 2;
        auto f = [&](const Vec& v) {
            BranchField b = branch;
            RawGrid o = offsets;
            scatter(v, 0, b.raw, layout.valid);
            scatter(v, half, o, layout.valid);
            const ComposedAvatar avatar = compose(b, o, layout, ranges);
            const PosedAvatar posed = pose_avatar(avatar, t.field);
            return dot(pack(posed.primitives), wprim) + dot(avatar.composed.data, wcomp.data);
        };
        const ComposedAvatar avatar = compose(branch, offsets, layout, ranges);
        const PosedAvatar posed = pose_avatar(avatar, t.field);
        std::vector<PrimitiveGrad> pg(posed.primitives.size());
        for (std::size_t k = 0; k < pg.size(); ++k) {
            const double* w = wprim.data() + k * kPrimValues;
            pg[k].position = Vec3(w[0], w[1], w[2]);
            pg[k].rotation = Vec4(w[3], w[4], w[5], w[6]);
            pg[k].scale = Vec3(w[7], w[8], w[9]);
            pg[k].opacity = w[10];
            pg[k].color = Vec3(w[11], w[12], w[13]);
        }
        const auto canon = pose_avatar_backward(avatar, posed, t.field, pg);
        const ComposeGrad cg = compose_backward(branch, offsets, avatar, ranges, canon, wcomp);
        Vec analytic = gather(cg.branch, layout.valid);
        const Vec ao = gather(cg.offsets, layout.valid);
        analytic.insert(analytic.end(), ao.begin(), ao.end());
        r.max_rel_error = std::max(r.max_rel_error, compare(f, x, analytic, rng));
    }
    return r;
}

GradCheck check_full_chain(int instances, std::uint64_t seed, int max_coords) {
    GradCheck r{"network+compose+lbs+render+losses", instances, 0.0};
    std::mt19937_64 rng(seed);
    const OffsetRanges ranges;
    const int w = 24, h = 20;
    const Camera cam = Camera::look_at(Vec3(0.2, 0.1, -2.0), Vec3::Zero(), Vec3::UnitY(), 40.0, w, h);
    for (int n = 0; n < instances; ++n) {
        const TinyRig t = tiny_rig(rng);
        const PositionMap& layout = t.rig.canonical;
        const BranchField branch = random_branch(rng, layout);
        OffsetNetwork net(layout.height, layout.width, 5, 2, rng());
        net.parameters() = random_vec(rng, net.parameters().size(), -0.3, 0.3);
        const Image target = random_image(rng, h, w);
        const double lambda_p = 0.1;

        const Vec xb = gather(branch.raw, layout.valid);
        Vec x = xb;
        x.insert(x.end(), net.parameters().begin(), net.parameters().end());
        auto loss = [&](const BranchField& b, const OffsetNetwork& m) {
            const RawGrid o = m.forward(t.posed, cam.forward());
            const PosedAvatar posed = pose_avatar(compose(b, o, layout, ranges), t.field);
            const Image im = render(posed.primitives, cam, Vec3::Zero()).raster.image;
            return l1_loss(im, target).value + lambda_p * perceptual_proxy(im, target).value;
        };
        auto f = [&](const Vec& v) {
            BranchField b = branch;
            scatter(v, 0, b.raw, layout.valid);
            OffsetNetwork m = net;
            std::copy(v.begin() + xb.size(), v.end(), m.parameters().begin());
            return loss(b, m);
        };

        OffsetNetwork::Cache cache;
        const RawGrid o = net.forward(t.posed, cam.forward(), &cache);
        const ComposedAvatar avatar = compose(branch, o, layout, ranges);
        const PosedAvatar posed = pose_avatar(avatar, t.field);
        const SceneRender scene = render(posed.primitives, cam, Vec3::Zero());
        Image grad = l1_loss(scene.raster.image, target).grad;
        const Image gp = perceptual_proxy(scene.raster.image, target).grad;
        for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += lambda_p * gp.data()[i];
        const auto prim = render_backward(scene, posed.primitives, cam, grad);
        const auto canon = pose_avatar_backward(avatar, posed, t.field, prim);
        const ComposeGrad cg = compose_backward(branch, o, avatar, ranges, canon, RawGrid());
        Vec analytic = gather(cg.branch, layout.valid);
        Vec gnet(net.parameters().size(), 0.0);
        net.backward(cache, cg.offsets, gnet);
        analytic.insert(analytic.end(), gnet.begin(), gnet.end());
        r.max_rel_error = std::max(r.max_rel_error, compare(f, x, analytic, rng, max_coords));
    }
    return r;
}

std::vector<GradCheck> all_gradient_checks(int instances, std::uint64_t seed) {
    return {check_projection(instances, seed + 1),
            check_rasterization(instances, seed + 2),
            check_render(instances, seed + 3),
            check_warp(instances, seed + 4),
            check_l1(instances, seed + 5),
            check_perceptual(instances, seed + 6),
            check_reg(instances, seed + 7),
            check_adversarial_generator(instances, seed + 8),
            check_adversarial_discriminator(instances, seed + 9),
            check_flow_regularizer(instances, seed + 10),
            check_offset_network(instances, seed + 11),
            check_lbs_chain(instances, seed + 12),
            check_full_chain(instances, seed + 13)};
}

}  // namespace drape::testing
