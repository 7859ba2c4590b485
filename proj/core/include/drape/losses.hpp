#pragma once

#include "drape/core.hpp"
#include "drape/discriminator.hpp"

#include <span>
#include <vector>

namespace drape {

struct ImageLoss {
    double value = 0.0;
    Image grad;  // dL/d(render)
};

// Mean absolute difference over all H*W*3 values.
ImageLoss l1_loss(const Image& render, const Image& target);

// Multi-scale edge-map L1: at full, half and quarter resolution (2x2 average
// pooling, odd trailing rows/columns dropped), the mean absolute difference
// of horizontal and of vertical forward differences, averaged (0.5 each);
// the three scales are averaged. Blind to global color offsets.
ImageLoss perceptual_proxy(const Image& render, const Image& target);

struct VectorLoss {
    double value = 0.0;
    std::vector<double> grad;
};

// Mean of squared entries.
VectorLoss reg_loss(std::span<const double> entries);

struct AdversarialTerms {
    double dis = 0.0;  // -mean log s(real) - mean log(1 - s(fake))
    double gen = 0.0;  // -mean log s(fake)
    std::vector<Image> grad_fake;       // dL_gen / d fake patches
    std::vector<double> grad_dis;       // dL_dis / d discriminator parameters
};

// Logits are clamped to [-20, 20] before the sigmoid.
AdversarialTerms adversarial_losses(const PatchDiscriminator& dis, std::span<const Image> real,
                                    std::span<const Image> fake);

struct LossWeights {
    double perceptual = 0.1;
    double reg = 1e-3;
    double adv = 0.05;
    double tv = 1e-3;
    double mag = 1e-4;

    void validate() const;
};

struct LossBreakdown {
    double l1 = 0.0;
    double lp = 0.0;
    double lreg = 0.0;
    double ladv_gen = 0.0;
    double ladv_dis = 0.0;  // reported only; not part of the generator objective
    double flow_reg = 0.0;  // already weighted by lambda_tv / lambda_mag
    double total = 0.0;
};

// total = l1 + w.perceptual * lp + w.reg * lreg + w.adv * ladv_gen + flow_reg
double total_loss(LossBreakdown& terms, const LossWeights& w);

}  // namespace drape
