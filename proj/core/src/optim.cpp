#include "drape/optim.hpp"

#include "drape/core.hpp"

#include <cmath>

namespace drape {

const char* group_name(GroupId id) {
    switch (id) {
        case GroupId::branch_src: return "branch_src";
        case GroupId::branch_tar: return "branch_tar";
        case GroupId::nld: return "nld";
        case GroupId::flows: return "flows";
        case GroupId::discriminator: return "discriminator";
    }
    return "unknown";
}

void AdamSettings::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ValidationError("adam betas must lie in [0,1)");
    }
    if (!(eps > 0.0)) throw ValidationError("adam eps must be > 0");
    if (warmup < 0) throw ValidationError("warmup must be >= 0");
}

AdamSettings default_settings(GroupId id) {
    AdamSettings s;
    switch (id) {
        case GroupId::branch_src:
        case GroupId::branch_tar: s.lr = 5e-3; break;
        case GroupId::nld: s.lr = 1e-3; break;
        case GroupId::flows: s.lr = 1e-2; break;
        case GroupId::discriminator: s.lr = 2e-4; break;
    }
    return s;
}

ParamGroup::ParamGroup(GroupId id, std::size_t size, AdamSettings settings)
    : id_(id), settings_(settings), m_(size, 0.0), v_(size, 0.0) {
    settings_.validate();
}

void ParamGroup::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ValidationError(std::string("optimizer group ") + name() + ": size mismatch");
    }
    if (frozen_) return;
    for (double g : grads) {
        if (!std::isfinite(g)) {
            throw ValidationError(std::string("optimizer group ") + name() + ": non-finite gradient");
        }
    }
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double b1 = settings_.beta1;
    const double b2 = settings_.beta2;
    double lr = settings_.lr;
    if (settings_.warmup > 0 && steps_ < static_cast<std::uint64_t>(settings_.warmup)) {
        lr *= t / settings_.warmup;
    }
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    const double step = lr / c1;
    const double root_c2 = std::sqrt(c2);
    const std::size_t n = params.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
        params[i] -= step * m_[i] / (std::sqrt(v_[i]) / root_c2 + settings_.eps);
    }
}

}  // namespace drape
