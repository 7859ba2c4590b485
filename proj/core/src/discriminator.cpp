#include "drape/discriminator.hpp"

#include <cmath>
#include <random>

namespace drape {

namespace {

struct Conv {
    int cin, cout, size;  // input spatial size; output is size / 2
    std::size_t weights() const { return static_cast<std::size_t>(cout) * cin * 16; }
    std::size_t count() const { return weights() + cout; }
};

constexpr Conv kLayers[3] = {{3, 16, 32}, {16, 32, 16}, {32, 1, 8}};

void conv_forward(const Conv& l, const double* w, const double* in, double* out) {
    const int os = l.size / 2;
    const double* b = w + l.weights();
    for (int co = 0; co < l.cout; ++co) {
        for (int oy = 0; oy < os; ++oy) {
            for (int ox = 0; ox < os; ++ox) {
                double acc = b[co];
                for (int ci = 0; ci < l.cin; ++ci) {
                    const double* wk = w + (static_cast<std::size_t>(co) * l.cin + ci) * 16;
                    const double* ip = in + static_cast<std::size_t>(ci) * l.size * l.size;
                    for (int ky = 0; ky < 4; ++ky) {
                        const int iy = 2 * oy - 1 + ky;
                        if (iy < 0 || iy >= l.size) continue;
                        for (int kx = 0; kx < 4; ++kx) {
                            const int ix = 2 * ox - 1 + kx;
                            if (ix < 0 || ix >= l.size) continue;
                            acc += wk[ky * 4 + kx] * ip[iy * l.size + ix];
                        }
                    }
                }
                out[(static_cast<std::size_t>(co) * os + oy) * os + ox] = acc;
            }
        }
    }
}

// gout: dL/d(pre-activation output). Accumulates into gw (may be null) and
// writes dL/d(input) into gin.
void conv_backward(const Conv& l, const double* w, const double* in, const double* gout, double* gw,
                   double* gin) {
    const int os = l.size / 2;
    std::fill(gin, gin + static_cast<std::size_t>(l.cin) * l.size * l.size, 0.0);
    for (int co = 0; co < l.cout; ++co) {
        for (int oy = 0; oy < os; ++oy) {
            for (int ox = 0; ox < os; ++ox) {
                const double g = gout[(static_cast<std::size_t>(co) * os + oy) * os + ox];
                if (gw) gw[l.weights() + co] += g;
                for (int ci = 0; ci < l.cin; ++ci) {
                    const std::size_t wo = (static_cast<std::size_t>(co) * l.cin + ci) * 16;
                    const std::size_t io = static_cast<std::size_t>(ci) * l.size * l.size;
                    for (int ky = 0; ky < 4; ++ky) {
                        const int iy = 2 * oy - 1 + ky;
                        if (iy < 0 || iy >= l.size) continue;
                        for (int kx = 0; kx < 4; ++kx) {
                            const int ix = 2 * ox - 1 + kx;
                            if (ix < 0 || ix >= l.size) continue;
                            if (gw) gw[wo + ky * 4 + kx] += g * in[io + iy * l.size + ix];
                            gin[io + iy * l.size + ix] += g * w[wo + ky * 4 + kx];
                        }
                    }
                }
            }
        }
    }
}

double leaky(double v) { return v > 0.0 ? v : PatchDiscriminator::kLeak * v; }

}  // namespace

std::size_t PatchDiscriminator::parameter_count() {
    return kLayers[0].count() + kLayers[1].count() + kLayers[2].count();
}

PatchDiscriminator::PatchDiscriminator(std::uint64_t seed) {
    params_.assign(parameter_count(), 0.0);
    std::mt19937_64 rng(seed);
    std::size_t at = 0;
    for (const Conv& l : kLayers) {
        std::normal_distribution<double> d(0.0, std::sqrt(2.0 / (l.cin * 16)) * 0.5);
        for (std::size_t i = 0; i < l.weights(); ++i) params_[at + i] = d(rng);
        at += l.count();
    }
}

double PatchDiscriminator::forward(const Image& patch, Cache* cache) const {
    if (patch.height() != kPatch || patch.width() != kPatch) {
        throw ValidationError("discriminator expects a 32x32 patch");
    }
    std::vector<double> in(3 * kPatch * kPatch);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < kPatch; ++y)
            for (int x = 0; x < kPatch; ++x) in[(c * kPatch + y) * kPatch + x] = patch.at(y, x, c);
    const double* w = params_.data();
    std::vector<double> a1(16 * 16 * 16), a2(32 * 8 * 8), a3(16);
    conv_forward(kLayers[0], w, in.data(), a1.data());
    for (double& v : a1) v = leaky(v);
    w += kLayers[0].count();
    conv_forward(kLayers[1], w, a1.data(), a2.data());
    for (double& v : a2) v = leaky(v);
    w += kLayers[1].count();
    conv_forward(kLayers[2], w, a2.data(), a3.data());
    double logit = 0.0;
    for (double v : a3) logit += v;
    logit /= 16.0;
    if (cache) {
        cache->input = std::move(in);
        cache->act1 = std::move(a1);
        cache->act2 = std::move(a2);
    }
    return logit;
}

Image PatchDiscriminator::backward(const Cache& cache, double grad_logit,
                                   std::span<double> grad_params) const {
    if (!grad_params.empty() && grad_params.size() != params_.size()) {
        throw ValidationError("discriminator gradient has the wrong size");
    }
    const double* w0 = params_.data();
    const double* w1 = w0 + kLayers[0].count();
    const double* w2 = w1 + kLayers[1].count();
    double* g0 = grad_params.empty() ? nullptr : grad_params.data();
    double* g1 = g0 ? g0 + kLayers[0].count() : nullptr;
    double* g2 = g1 ? g1 + kLayers[1].count() : nullptr;

    std::vector<double> g3(16, grad_logit / 16.0);
    std::vector<double> ga2(32 * 8 * 8);
    conv_backward(kLayers[2], w2, cache.act2.data(), g3.data(), g2, ga2.data());
    // Leaky ReLU: post-activation sign equals pre-activation sign.
    for (std::size_t i = 0; i < ga2.size(); ++i) if (!(cache.act2[i] > 0.0)) ga2[i] *= kLeak;
    std::vector<double> ga1(16 * 16 * 16);
    conv_backward(kLayers[1], w1, cache.act1.data(), ga2.data(), g1, ga1.data());
    for (std::size_t i = 0; i < ga1.size(); ++i) if (!(cache.act1[i] > 0.0)) ga1[i] *= kLeak;
    std::vector<double> gin(3 * kPatch * kPatch);
    conv_backward(kLayers[0], w0, cache.input.data(), ga1.data(), g0, gin.data());

    Image out(kPatch, kPatch);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < kPatch; ++y)
            for (int x = 0; x < kPatch; ++x) out.at(y, x, c) = gin[(c * kPatch + y) * kPatch + x];
    return out;
}

Image extract_patch(const Image& image, int x, int y) {
    constexpr int p = PatchDiscriminator::kPatch;
    if (x < 0 || y < 0 || x + p > image.width() || y + p > image.height()) {
        throw ValidationError("patch window outside the image");
    }
    Image out(p, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < p; ++i)
            for (int c = 0; c < 3; ++c) out.at(j, i, c) = image.at(y + j, x + i, c);
    return out;
}

void scatter_patch(Image& grad_image, const Image& grad_patch, int x, int y) {
    constexpr int p = PatchDiscriminator::kPatch;
    if (x < 0 || y < 0 || x + p > grad_image.width() || y + p > grad_image.height()) {
        throw ValidationError("patch window outside the image");
    }
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < p; ++i)
            for (int c = 0; c < 3; ++c) grad_image.at(y + j, x + i, c) += grad_patch.at(j, i, c);
}

}  // namespace drape
