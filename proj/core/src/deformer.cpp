#include "drape/deformer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drape {

namespace {

Eigen::Matrix4d left_mul(const Quat& r) {
    Eigen::Matrix4d m;
    m << r.w, -r.x, -r.y, -r.z,
        r.x, r.w, -r.z, r.y,
        r.y, r.z, r.w, -r.x,
        r.z, -r.y, r.x, r.w;
    return m;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }
bool inside01(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

void OffsetRanges::validate() const {
    for (double r : {position, rotation, scale, color}) {
        if (!std::isfinite(r) || r < 0.0) throw ValidationError("offset ranges must be finite and >= 0");
    }
}

RawGrid::RawGrid(int h, int w)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w * kRawChannels, 0.0) {
    if (h < 0 || w < 0) throw ValidationError("negative raw grid dimensions");
}

const char* branch_name(Branch b) { return b == Branch::src ? "src" : "tar"; }

BranchField BranchField::initial(Branch branch, const PositionMap& layout, double scale,
                                 double opacity, const Vec3& color) {
    if (!(scale > 0.0)) throw ValidationError("initial scale must be > 0");
    if (!(opacity > 0.0 && opacity < 1.0)) throw ValidationError("initial opacity must be in (0,1)");
    if ((color.array() <= 0.0).any() || (color.array() >= 1.0).any()) {
        throw ValidationError("initial color must be in (0,1)");
    }
    BranchField f;
    f.branch = branch;
    f.raw = RawGrid(layout.height, layout.width);
    f.valid = layout.valid;
    const auto logit = [](double p) { return std::log(p / (1.0 - p)); };
    for (std::size_t i = 0; i < layout.texel_count(); ++i) {
        if (!layout.is_valid(i)) continue;
        double* t = f.raw.texel(i);
        t[kRawRotation] = 1.0;
        for (int k = 0; k < 3; ++k) t[kRawScale + k] = std::log(scale);
        t[kRawOpacity] = logit(opacity);
        for (int k = 0; k < 3; ++k) t[kRawColor + k] = logit(color[k]);
    }
    return f;
}

void BranchField::validate() const {
    if (raw.data.size() != raw.texel_count() * kRawChannels || valid.size() != raw.texel_count()) {
        throw ValidationError("branch field arrays do not match its grid");
    }
    for (double v : raw.data) {
        if (!std::isfinite(v)) throw ValidationError("branch field has non-finite raw values");
    }
}

OffsetNetwork::OffsetNetwork(int uv_height, int uv_width, int hidden, int embedding,
                             std::uint64_t seed)
    : uv_height_(uv_height), uv_width_(uv_width), hidden_(hidden), embedding_(embedding) {
    if (uv_height < 1 || uv_width < 1) throw ValidationError("offset network needs a non-empty grid");
    if (hidden < 1) throw ValidationError("offset network hidden width must be >= 1");
    if (embedding < 0) throw ValidationError("offset network embedding size must be >= 0");
    const Layout l = layout();
    params_.assign(l.total, 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> embed_dist(0.0, 0.1);
    for (std::size_t i = l.embed; i < l.w1; ++i) params_[i] = embed_dist(rng);
    const auto xavier = [&](std::size_t at, int out, int in) {
        const double a = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> d(-a, a);
        for (std::size_t i = 0; i < static_cast<std::size_t>(out) * in; ++i) params_[at + i] = d(rng);
    };
    xavier(l.w1, hidden, input_size());
    xavier(l.w2, hidden, hidden);
    // W3 and b3 stay zero so every offset is exactly 0 at initialization.
}

OffsetNetwork::Layout OffsetNetwork::layout() const {
    Layout l{};
    const std::size_t texels = static_cast<std::size_t>(uv_height_) * uv_width_;
    const std::size_t in = static_cast<std::size_t>(input_size());
    const std::size_t h = static_cast<std::size_t>(hidden_);
    l.embed = 0;
    l.w1 = l.embed + texels * embedding_;
    l.b1 = l.w1 + h * in;
    l.w2 = l.b1 + h;
    l.b2 = l.w2 + h * h;
    l.w3 = l.b2 + h;
    l.b3 = l.w3 + kRawChannels * h;
    l.total = l.b3 + kRawChannels;
    return l;
}

Eigen::MatrixXd OffsetNetwork::matrix(std::size_t offset, int rows, int cols) const {
    return Eigen::Map<const Eigen::MatrixXd>(params_.data() + offset, rows, cols);
}

RawGrid OffsetNetwork::forward(const PositionMap& posed, const Vec3& view, Cache* cache) const {
    if (posed.height != uv_height_ || posed.width != uv_width_) {
        throw ValidationError("position map does not match the offset network grid");
    }
    if (!view.allFinite() || std::abs(view.norm() - 1.0) > 1e-6) {
        throw ValidationError("view direction must be a finite unit vector");
    }
    const Layout l = layout();
    const int in = input_size();
    std::vector<int> texels;
    for (std::size_t i = 0; i < posed.texel_count(); ++i) {
        if (!posed.is_valid(i)) continue;
        if (!posed.position[i].allFinite()) throw ValidationError("non-finite posed position");
        texels.push_back(static_cast<int>(i));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(texels.size());
    Eigen::MatrixXd x(in, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const int t = texels[k];
        const int row = t / uv_width_;
        const int col = t % uv_width_;
        x.block<3, 1>(0, k) = posed.position[t];
        x.block<3, 1>(3, k) = view;
        x(6, k) = (col + 0.5) / uv_width_;
        x(7, k) = (row + 0.5) / uv_height_;
        for (int e = 0; e < embedding_; ++e) {
            x(kFixedInputs + e, k) = params_[l.embed + static_cast<std::size_t>(t) * embedding_ + e];
        }
    }
    // Owned (aligned) copies: Eigen's vectorized kernels peel to the first
    // aligned address, so products over Maps into params_ would sum in an
    // order that depends on where the heap placed the buffer.
    const Eigen::MatrixXd w1 = matrix(l.w1, hidden_, in);
    const Eigen::VectorXd b1 = matrix(l.b1, hidden_, 1);
    const Eigen::MatrixXd w2 = matrix(l.w2, hidden_, hidden_);
    const Eigen::VectorXd b2 = matrix(l.b2, hidden_, 1);
    const Eigen::MatrixXd w3 = matrix(l.w3, kRawChannels, hidden_);
    const Eigen::VectorXd b3 = matrix(l.b3, kRawChannels, 1);

    Eigen::MatrixXd h1 = ((w1 * x).colwise() + b1).array().tanh().matrix();
    Eigen::MatrixXd h2 = ((w2 * h1).colwise() + b2).array().tanh().matrix();
    const Eigen::MatrixXd out = (w3 * h2).colwise() + b3;

    RawGrid grid(uv_height_, uv_width_);
    for (Eigen::Index k = 0; k < n; ++k) {
        double* t = grid.texel(static_cast<std::size_t>(texels[k]));
        for (int c = 0; c < kRawChannels; ++c) t[c] = out(c, k);
    }
    if (cache) {
        cache->texels = std::move(texels);
        cache->input = std::move(x);
        cache->hidden1 = std::move(h1);
        cache->hidden2 = std::move(h2);
    }
    return grid;
}

void OffsetNetwork::backward(const Cache& cache, const RawGrid& grad_offsets,
                             std::span<double> grad) const {
    const Layout l = layout();
    if (grad.size() != l.total) throw ValidationError("offset network gradient has the wrong size");
    if (grad_offsets.height != uv_height_ || grad_offsets.width != uv_width_) {
        throw ValidationError("offset gradient does not match the network grid");
    }
    const int in = input_size();
    const Eigen::Index n = static_cast<Eigen::Index>(cache.texels.size());
    Eigen::MatrixXd g3(kRawChannels, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double* t = grad_offsets.texel(static_cast<std::size_t>(cache.texels[k]));
        for (int c = 0; c < kRawChannels; ++c) g3(c, k) = t[c];
    }
    const Eigen::MatrixXd w1 = matrix(l.w1, hidden_, in);
    const Eigen::MatrixXd w2 = matrix(l.w2, hidden_, hidden_);
    const Eigen::MatrixXd w3 = matrix(l.w3, kRawChannels, hidden_);
    // Evaluated into owned temporaries, then added element by element.
    auto accumulate = [&](std::size_t offset, const Eigen::MatrixXd& m) {
        const double* src = m.data();
        for (Eigen::Index i = 0; i < m.size(); ++i) grad[offset + i] += src[i];
    };

    accumulate(l.w3, g3 * cache.hidden2.transpose());
    accumulate(l.b3, g3.rowwise().sum());
    const Eigen::MatrixXd g2 =
        ((w3.transpose() * g3).array() * (1.0 - cache.hidden2.array().square())).matrix();
    accumulate(l.w2, g2 * cache.hidden1.transpose());
    accumulate(l.b2, g2.rowwise().sum());
    const Eigen::MatrixXd g1 =
        ((w2.transpose() * g2).array() * (1.0 - cache.hidden1.array().square())).matrix();
    accumulate(l.w1, g1 * cache.input.transpose());
    accumulate(l.b1, g1.rowwise().sum());
    if (embedding_ > 0) {
        const Eigen::MatrixXd gx = w1.rightCols(embedding_).transpose() * g1;
        for (Eigen::Index k = 0; k < n; ++k) {
            double* e = grad.data() + l.embed + static_cast<std::size_t>(cache.texels[k]) * embedding_;
            for (int j = 0; j < embedding_; ++j) e[j] += gx(j, k);
        }
    }
}

ComposedAvatar compose(const BranchField& branch, const RawGrid& offsets,
                       const PositionMap& canonical_template, const OffsetRanges& ranges) {
    const RawGrid& raw = branch.raw;
    if (raw.height != canonical_template.height || raw.width != canonical_template.width ||
        branch.valid != canonical_template.valid) {
        throw ValidationError("branch field and template grids are not aligned");
    }
    if (!offsets.empty() && (offsets.height != raw.height || offsets.width != raw.width)) {
        throw ValidationError("offset grid and branch field are not aligned");
    }
    ComposedAvatar out;
    out.composed = RawGrid(raw.height, raw.width);
    for (std::size_t i = 0; i < raw.texel_count(); ++i) {
        if (!branch.valid[i]) continue;
        const double* b = raw.texel(i);
        double o[kRawChannels] = {};
        if (!offsets.empty()) std::copy(offsets.texel(i), offsets.texel(i) + kRawChannels, o);
        double* m = out.composed.texel(i);
        GaussianPrimitive g;
        for (int k = 0; k < 3; ++k) {
            m[kRawPosition + k] = b[kRawPosition + k] + ranges.position * std::tanh(o[kRawPosition + k]);
        }
        g.position = canonical_template.position[i] +
                     Vec3(m[kRawPosition], m[kRawPosition + 1], m[kRawPosition + 2]);
        for (int k = 0; k < 4; ++k) {
            m[kRawRotation + k] = b[kRawRotation + k] + ranges.rotation * std::tanh(o[kRawRotation + k]);
        }
        const Quat u{m[kRawRotation], m[kRawRotation + 1], m[kRawRotation + 2], m[kRawRotation + 3]};
        const double un = u.norm();
        if (!(un > 1e-12)) throw ValidationError("composed rotation has zero norm");
        g.rotation = u.normalized();
        for (int k = 0; k < 3; ++k) {
            m[kRawScale + k] = b[kRawScale + k] + ranges.scale * std::tanh(o[kRawScale + k]);
            g.scale[k] = std::exp(m[kRawScale + k]);
        }
        m[kRawOpacity] = b[kRawOpacity] + std::tanh(o[kRawOpacity]);
        g.opacity = clamp01(sigmoid(b[kRawOpacity]) + std::tanh(o[kRawOpacity]));
        for (int k = 0; k < 3; ++k) {
            m[kRawColor + k] = b[kRawColor + k] + ranges.color * std::tanh(o[kRawColor + k]);
            g.color[k] = clamp01(sigmoid(b[kRawColor + k]) + ranges.color * std::tanh(o[kRawColor + k]));
        }
        out.primitives.push_back(g);
        out.texel.push_back(static_cast<int>(i));
    }
    return out;
}

ComposeGrad compose_backward(const BranchField& branch, const RawGrid& offsets,
                             const ComposedAvatar& avatar, const OffsetRanges& ranges,
                             std::span<const PrimitiveGrad> grad, const RawGrid& grad_composed) {
    if (grad.size() != avatar.primitives.size()) {
        throw ValidationError("compose_backward needs one gradient per primitive");
    }
    const RawGrid& raw = branch.raw;
    ComposeGrad out;
    out.branch = RawGrid(raw.height, raw.width);
    out.offsets = RawGrid(raw.height, raw.width);
    for (std::size_t p = 0; p < avatar.primitives.size(); ++p) {
        const std::size_t i = static_cast<std::size_t>(avatar.texel[p]);
        const double* b = raw.texel(i);
        double o[kRawChannels] = {};
        if (!offsets.empty()) std::copy(offsets.texel(i), offsets.texel(i) + kRawChannels, o);
        const double* m = avatar.composed.texel(i);
        double gm[kRawChannels] = {};
        if (!grad_composed.empty()) std::copy(grad_composed.texel(i), grad_composed.texel(i) + kRawChannels, gm);
        const GaussianPrimitive& g = avatar.primitives[p];
        const PrimitiveGrad& d = grad[p];
        double* gb = out.branch.texel(i);
        double* go = out.offsets.texel(i);

        // Composed raw entries: dm/db = 1, dm/do = r (1 - tanh^2).
        auto through = [&](int c, double r, double gtotal) {
            const double t = std::tanh(o[c]);
            gb[c] += gtotal;
            go[c] += gtotal * r * (1.0 - t * t);
        };
        for (int k = 0; k < 3; ++k) through(kRawPosition + k, ranges.position, d.position[k] + gm[kRawPosition + k]);

        const Vec4 u(m[kRawRotation], m[kRawRotation + 1], m[kRawRotation + 2], m[kRawRotation + 3]);
        const double un = u.norm();
        const Vec4 q = g.rotation.vec();
        const Vec4 gu = (d.rotation - q * q.dot(d.rotation)) / un;
        for (int k = 0; k < 4; ++k) through(kRawRotation + k, ranges.rotation, gu[k] + gm[kRawRotation + k]);

        for (int k = 0; k < 3; ++k) {
            through(kRawScale + k, ranges.scale, d.scale[k] * g.scale[k] + gm[kRawScale + k]);
        }

        {
            const double sa = sigmoid(b[kRawOpacity]);
            const double ta = std::tanh(o[kRawOpacity]);
            const double ga = inside01(sa + ta) ? d.opacity : 0.0;
            gb[kRawOpacity] += ga * sa * (1.0 - sa) + gm[kRawOpacity];
            go[kRawOpacity] += (ga + gm[kRawOpacity]) * (1.0 - ta * ta);
        }
        for (int k = 0; k < 3; ++k) {
            const int c = kRawColor + k;
            const double sc = sigmoid(b[c]);
            const double tc = std::tanh(o[c]);
            const double gc = inside01(sc + ranges.color * tc) ? d.color[k] : 0.0;
            gb[c] += gc * sc * (1.0 - sc) + gm[c];
            go[c] += (gc + gm[c]) * ranges.color * (1.0 - tc * tc);
        }
    }
    return out;
}

PosedAvatar pose_avatar(const ComposedAvatar& avatar, const SkinningField& field) {
    PosedAvatar out;
    out.primitives.reserve(avatar.primitives.size());
    out.source.reserve(avatar.primitives.size());
    for (std::size_t p = 0; p < avatar.primitives.size(); ++p) {
        const GaussianPrimitive& g = avatar.primitives[p];
        if (!(g.opacity > 0.0)) continue;
        const std::size_t i = static_cast<std::size_t>(avatar.texel[p]);
        GaussianPrimitive posed = g;
        posed.position = field.apply(i, g.position);
        posed.rotation = field.rotation_quat[i] * g.rotation;
        out.primitives.push_back(posed);
        out.source.push_back(static_cast<int>(p));
    }
    return out;
}

std::vector<PrimitiveGrad> pose_avatar_backward(const ComposedAvatar& avatar,
                                                const PosedAvatar& posed,
                                                const SkinningField& field,
                                                std::span<const PrimitiveGrad> grad) {
    if (grad.size() != posed.primitives.size()) {
        throw ValidationError("pose_avatar_backward needs one gradient per posed primitive");
    }
    std::vector<PrimitiveGrad> out(avatar.primitives.size());
    for (std::size_t k = 0; k < posed.primitives.size(); ++k) {
        const std::size_t p = static_cast<std::size_t>(posed.source[k]);
        const std::size_t i = static_cast<std::size_t>(avatar.texel[p]);
        PrimitiveGrad& d = out[p];
        d.position = field.linear(i).transpose() * grad[k].position;
        d.rotation = left_mul(field.rotation_quat[i]).transpose() * grad[k].rotation;
        d.scale = grad[k].scale;
        d.opacity = grad[k].opacity;
        d.color = grad[k].color;
    }
    return out;
}

PosedAvatar build_avatar(const BranchField& branch, const OffsetNetwork* net, const AvatarRig& rig,
                         const Pose& pose, const Camera& camera, const OffsetRanges& ranges) {
    const auto transforms = skinning_transforms(rig.skeleton, pose);
    const LbsResult lbs = lbs_transform(rig.canonical, rig.weights, transforms);
    RawGrid offsets;
    if (net) offsets = net->forward(lbs.posed, camera.forward());
    const ComposedAvatar avatar = compose(branch, offsets, rig.canonical, ranges);
    return pose_avatar(avatar, lbs.field);
}

}  // namespace drape
