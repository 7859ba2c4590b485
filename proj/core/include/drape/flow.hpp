#pragma once

#include "drape/core.hpp"

#include <optional>
#include <vector>

namespace drape {

// Backward warp: out(x, y) = bilinear sample of `image` at (x + dx, y + dy),
// sample coordinates clamped to the image border. Zero flow is an exact
// identity.
Image warp(const Image& image, const FlowField& flow);

// warp() that keeps its inputs for the backward pass.
class WarpOp {
public:
    Image forward(const Image& image, const FlowField& flow);

    struct Grads {
        Image image;
        FlowField flow;
    };
    // The flow derivative is the one-sided (forward) bilinear slope and is
    // zero along an axis whose sample coordinate was clamped.
    Grads backward(const Image& grad_output) const;

private:
    std::optional<Image> image_;
    std::optional<FlowField> flow_;
};

struct FlowRegularization {
    double value = 0.0;
    double tv = 0.0;         // unweighted
    double magnitude = 0.0;  // unweighted
    FlowField grad;
};

// lambda_tv * TV + lambda_mag * mean |F|^2 with
// TV = sum over both components of |F(x+1,y) - F(x,y)| + |F(x,y+1) - F(x,y)|,
// divided by H*W.
FlowRegularization flow_regularizer(const FlowField& flow, double lambda_tv, double lambda_mag);

// One learnable flow per supervised frame, all starting at zero.
struct FlowBank {
    int height = 0;
    int width = 0;
    std::vector<FlowField> flows;

    FlowBank() = default;
    FlowBank(std::size_t frames, int h, int w);
    std::size_t size() const { return flows.size(); }
    void validate() const;
};

}  // namespace drape
