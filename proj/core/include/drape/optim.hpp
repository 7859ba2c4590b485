#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace drape {

enum class GroupId { branch_src, branch_tar, nld, flows, discriminator };
const char* group_name(GroupId id);

struct AdamSettings {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int warmup = 0;  // linear lr ramp over the first `warmup` steps

    void validate() const;
};

AdamSettings default_settings(GroupId id);

// Adam over one flat parameter vector.
class ParamGroup {
public:
    ParamGroup() = default;
    ParamGroup(GroupId id, std::size_t size, AdamSettings settings);

    GroupId id() const { return id_; }
    const char* name() const { return group_name(id_); }
    const AdamSettings& settings() const { return settings_; }
    std::size_t size() const { return m_.size(); }
    std::uint64_t steps() const { return steps_; }
    bool frozen() const { return frozen_; }

    void freeze() { frozen_ = true; }
    void unfreeze() { frozen_ = false; }

    // Bias-corrected Adam update. No-op while frozen (moments and the step
    // counter are left untouched). Throws ValidationError naming the group on
    // a non-finite or mis-sized gradient.
    void step(std::span<double> params, std::span<const double> grads);

    // Moment buffers, exposed for checkpointing.
    std::vector<double>& first_moment() { return m_; }
    std::vector<double>& second_moment() { return v_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }
    void set_steps(std::uint64_t s) { steps_ = s; }

private:
    GroupId id_ = GroupId::branch_src;
    AdamSettings settings_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t steps_ = 0;
    bool frozen_ = false;
};

}  // namespace drape
