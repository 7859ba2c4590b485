#include "drape/flow.hpp"

#include <algorithm>
#include <cmath>

namespace drape {

namespace {

struct Sample {
    int x0, x1, y0, y1;
    double fx, fy;
    bool clamped_x, clamped_y;
};

Sample locate(double sx, double sy, int width, int height) {
    Sample s;
    const double xmax = width - 1;
    const double ymax = height - 1;
    s.clamped_x = sx < 0.0 || sx > xmax;
    s.clamped_y = sy < 0.0 || sy > ymax;
    sx = std::min(std::max(sx, 0.0), xmax);
    sy = std::min(std::max(sy, 0.0), ymax);
    s.x0 = static_cast<int>(std::floor(sx));
    s.y0 = static_cast<int>(std::floor(sy));
    s.x1 = std::min(s.x0 + 1, width - 1);
    s.y1 = std::min(s.y0 + 1, height - 1);
    s.fx = sx - s.x0;
    s.fy = sy - s.y0;
    return s;
}

void check_shapes(const Image& image, const FlowField& flow) {
    if (image.height() != flow.height() || image.width() != flow.width()) {
        throw ValidationError("warp: image and flow shapes differ");
    }
    if (!flow.all_finite()) throw ValidationError("warp: non-finite flow");
}

}  // namespace

Image warp(const Image& image, const FlowField& flow) {
    check_shapes(image, flow);
    const int h = image.height();
    const int w = image.width();
    Image out(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Sample s = locate(x + flow.dx(y, x), y + flow.dy(y, x), w, h);
            for (int c = 0; c < Image::kChannels; ++c) {
                const double top = (1.0 - s.fx) * image.at(s.y0, s.x0, c) + s.fx * image.at(s.y0, s.x1, c);
                const double bot = (1.0 - s.fx) * image.at(s.y1, s.x0, c) + s.fx * image.at(s.y1, s.x1, c);
                out.at(y, x, c) = (1.0 - s.fy) * top + s.fy * bot;
            }
        }
    }
    return out;
}

Image WarpOp::forward(const Image& image, const FlowField& flow) {
    Image out = warp(image, flow);
    image_ = image;
    flow_ = flow;
    return out;
}

WarpOp::Grads WarpOp::backward(const Image& grad_output) const {
    if (!image_ || !flow_) throw ValidationError("WarpOp::backward called before forward");
    const Image& image = *image_;
    const FlowField& flow = *flow_;
    if (!grad_output.same_shape(image)) throw ValidationError("warp gradient shape mismatch");
    const int h = image.height();
    const int w = image.width();
    Grads g{Image(h, w), FlowField(h, w)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Sample s = locate(x + flow.dx(y, x), y + flow.dy(y, x), w, h);
            double gx = 0.0;
            double gy = 0.0;
            for (int c = 0; c < Image::kChannels; ++c) {
                const double go = grad_output.at(y, x, c);
                const double i00 = image.at(s.y0, s.x0, c);
                const double i01 = image.at(s.y0, s.x1, c);
                const double i10 = image.at(s.y1, s.x0, c);
                const double i11 = image.at(s.y1, s.x1, c);
                g.image.at(s.y0, s.x0, c) += go * (1.0 - s.fx) * (1.0 - s.fy);
                g.image.at(s.y0, s.x1, c) += go * s.fx * (1.0 - s.fy);
                g.image.at(s.y1, s.x0, c) += go * (1.0 - s.fx) * s.fy;
                g.image.at(s.y1, s.x1, c) += go * s.fx * s.fy;
                gx += go * ((1.0 - s.fy) * (i01 - i00) + s.fy * (i11 - i10));
                gy += go * ((1.0 - s.fx) * (i10 - i00) + s.fx * (i11 - i01));
            }
            g.flow.dx(y, x) = s.clamped_x ? 0.0 : gx;
            g.flow.dy(y, x) = s.clamped_y ? 0.0 : gy;
        }
    }
    return g;
}

FlowRegularization flow_regularizer(const FlowField& flow, double lambda_tv, double lambda_mag) {
    const int h = flow.height();
    const int w = flow.width();
    FlowRegularization r;
    r.grad = FlowField(h, w);
    if (h == 0 || w == 0) return r;
    const double n = static_cast<double>(h) * w;
    const auto& f = flow.data();
    auto& g = r.grad.data();
    const auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = flow.index(y, x);
            for (int c = 0; c < 2; ++c) {
                r.magnitude += f[i + c] * f[i + c];
                g[i + c] += lambda_mag * 2.0 * f[i + c] / n;
                if (x + 1 < w) {
                    const std::size_t j = flow.index(y, x + 1);
                    const double d = f[j + c] - f[i + c];
                    r.tv += std::abs(d);
                    g[j + c] += lambda_tv * sign(d) / n;
                    g[i + c] -= lambda_tv * sign(d) / n;
                }
                if (y + 1 < h) {
                    const std::size_t j = flow.index(y + 1, x);
                    const double d = f[j + c] - f[i + c];
                    r.tv += std::abs(d);
                    g[j + c] += lambda_tv * sign(d) / n;
                    g[i + c] -= lambda_tv * sign(d) / n;
                }
            }
        }
    }
    r.tv /= n;
    r.magnitude /= n;
    r.value = lambda_tv * r.tv + lambda_mag * r.magnitude;
    return r;
}

FlowBank::FlowBank(std::size_t frames, int h, int w) : height(h), width(w), flows(frames, FlowField(h, w)) {}

void FlowBank::validate() const {
    for (const auto& f : flows) {
        if (f.height() != height || f.width() != width) throw ValidationError("flow bank shape mismatch");
        if (!f.all_finite()) throw ValidationError("flow bank has non-finite values");
    }
}

}  // namespace drape
