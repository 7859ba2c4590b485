#include "drape/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace drape {

namespace {

void check_pair(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw ValidationError(std::string(what) + ": image shapes differ");
}

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

Image pool2(const Image& in) {
    const int h = in.height() / 2;
    const int w = in.width() / 2;
    Image out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                out.at(y, x, c) = 0.25 * (in.at(2 * y, 2 * x, c) + in.at(2 * y, 2 * x + 1, c) +
                                          in.at(2 * y + 1, 2 * x, c) + in.at(2 * y + 1, 2 * x + 1, c));
            }
    return out;
}

void pool2_backward(const Image& g, Image& gin) {
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = 0.25 * g.at(y, x, c);
                gin.at(2 * y, 2 * x, c) += v;
                gin.at(2 * y, 2 * x + 1, c) += v;
                gin.at(2 * y + 1, 2 * x, c) += v;
                gin.at(2 * y + 1, 2 * x + 1, c) += v;
            }
}

// 0.5 * (mean |dx r - dx t| + mean |dy r - dy t|); writes d/dr into grad.
// The gradient is gathered per pixel from stored signs; the in-place
// scatter form was miscompiled by GCC 11 at -O3 -march=native.
double edge_l1(const Image& r, const Image& t, Image& grad) {
    const int h = r.height();
    const int w = r.width();
    grad = Image(h, w);
    double value = 0.0;
    std::vector<double> sx(static_cast<std::size_t>(h) * w * 3, 0.0), sy(sx.size(), 0.0);
    auto at = [w](int y, int x, int c) { return (static_cast<std::size_t>(y) * w + x) * 3 + c; };
    const double nx = w > 1 ? static_cast<double>(h) * (w - 1) * 3 : 1.0;
    const double ny = h > 1 ? static_cast<double>(h - 1) * w * 3 : 1.0;
    double sum_x = 0.0, sum_y = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                if (x + 1 < w) {
                    const double d = (r.at(y, x + 1, c) - r.at(y, x, c)) - (t.at(y, x + 1, c) - t.at(y, x, c));
                    sum_x += std::abs(d);
                    sx[at(y, x, c)] = sign(d);
                }
                if (y + 1 < h) {
                    const double d = (r.at(y + 1, x, c) - r.at(y, x, c)) - (t.at(y + 1, x, c) - t.at(y, x, c));
                    sum_y += std::abs(d);
                    sy[at(y, x, c)] = sign(d);
                }
            }
    if (w > 1) value += 0.5 * sum_x / nx;
    if (h > 1) value += 0.5 * sum_y / ny;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double gx = -sx[at(y, x, c)];
                if (x > 0) gx += sx[at(y, x - 1, c)];
                double gy = -sy[at(y, x, c)];
                if (y > 0) gy += sy[at(y - 1, x, c)];
                grad.at(y, x, c) = 0.5 * gx / nx + 0.5 * gy / ny;
            }
    return value;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

ImageLoss l1_loss(const Image& render, const Image& target) {
    check_pair(render, target, "l1_loss");
    ImageLoss out;
    out.grad = Image(render.height(), render.width());
    const std::size_t n = render.size();
    if (n == 0) return out;
    const auto& r = render.data();
    const auto& t = target.data();
    auto& g = out.grad.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = r[i] - t[i];
        sum += std::abs(d);
        g[i] = sign(d) / static_cast<double>(n);
    }
    out.value = sum / static_cast<double>(n);
    return out;
}

ImageLoss perceptual_proxy(const Image& render, const Image& target) {
    check_pair(render, target, "perceptual_proxy");
    constexpr int kScales = 3;
    std::vector<Image> rs{render}, ts{target};
    for (int s = 1; s < kScales; ++s) {
        rs.push_back(pool2(rs.back()));
        ts.push_back(pool2(ts.back()));
    }
    ImageLoss out;
    std::vector<Image> grads(kScales);
    for (int s = 0; s < kScales; ++s) out.value += edge_l1(rs[s], ts[s], grads[s]) / kScales;
    // Chain the coarse-scale gradients back through the pooling pyramid.
    for (int s = kScales - 1; s > 0; --s) pool2_backward(grads[s], grads[s - 1]);
    out.grad = std::move(grads[0]);
    for (double& v : out.grad.data()) v /= kScales;
    return out;
}

VectorLoss reg_loss(std::span<const double> entries) {
    VectorLoss out;
    out.grad.assign(entries.size(), 0.0);
    if (entries.empty()) return out;
    const double n = static_cast<double>(entries.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        sum += entries[i] * entries[i];
        out.grad[i] = 2.0 * entries[i] / n;
    }
    out.value = sum / n;
    return out;
}

AdversarialTerms adversarial_losses(const PatchDiscriminator& dis, std::span<const Image> real,
                                    std::span<const Image> fake) {
    if (real.empty() || fake.empty()) throw ValidationError("adversarial_losses needs non-empty patch sets");
    constexpr double kClamp = 20.0;
    AdversarialTerms out;
    out.grad_dis.assign(dis.parameters().size(), 0.0);
    const double nr = static_cast<double>(real.size());
    const double nf = static_cast<double>(fake.size());
    PatchDiscriminator::Cache cache;
    for (const Image& p : real) {
        const double raw = dis.forward(p, &cache);
        const double z = std::clamp(raw, -kClamp, kClamp);
        out.dis += softplus(-z) / nr;
        const double dz = (sigmoid(z) - 1.0) / nr;
        const double draw = (raw > -kClamp && raw < kClamp) ? dz : 0.0;
        dis.backward(cache, draw, out.grad_dis);
    }
    for (const Image& p : fake) {
        const double raw = dis.forward(p, &cache);
        const double z = std::clamp(raw, -kClamp, kClamp);
        const bool pass = raw > -kClamp && raw < kClamp;
        out.dis += softplus(z) / nf;
        out.gen += softplus(-z) / nf;
        const double dz_dis = pass ? sigmoid(z) / nf : 0.0;
        const double dz_gen = pass ? (sigmoid(z) - 1.0) / nf : 0.0;
        dis.backward(cache, dz_dis, out.grad_dis);
        out.grad_fake.push_back(dis.backward(cache, dz_gen, {}));
    }
    return out;
}

void LossWeights::validate() const {
    for (double v : {perceptual, reg, adv, tv, mag}) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("loss weights must be finite and >= 0");
    }
}

double total_loss(LossBreakdown& t, const LossWeights& w) {
    t.total = t.l1 + w.perceptual * t.lp + w.reg * t.lreg + w.adv * t.ladv_gen + t.flow_reg;
    return t.total;
}

}  // namespace drape
