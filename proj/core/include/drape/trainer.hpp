#pragma once

#include "drape/checkpoint.hpp"
#include "drape/config.hpp"
#include "drape/dataset.hpp"
#include "drape/deformer.hpp"
#include "drape/discriminator.hpp"
#include "drape/eval.hpp"
#include "drape/flow.hpp"
#include "drape/losses.hpp"
#include "drape/optim.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace drape {

// The two branch fields and the shared offset network.
struct AvatarModel {
    Config config;
    AvatarRig rig;
    BranchField src;
    BranchField tar;
    OffsetNetwork net;

    static AvatarModel initial(const Config& config, const AvatarRig& rig);

    const BranchField& branch(Branch b) const { return b == Branch::src ? src : tar; }
    // The offset network is bypassed (zero offsets) when enable_nld is off.
    PosedAvatar build(Branch b, const Pose& pose, const Camera& camera) const;
    Image render(Branch b, const Pose& pose, const Camera& camera, const Vec3& background) const;
};

// Terms logged for one branch, averaged over the views of an iteration.
struct IterationLog {
    std::uint64_t iteration = 0;
    LossBreakdown tar;
    LossBreakdown src;
};

inline constexpr const char* kLogHeader = "iter,l1,lp,lreg,ladv_gen,ladv_dis,flow_reg,total";
std::string log_row(std::uint64_t iteration, const LossBreakdown& terms);

class Trainer {
public:
    Trainer(const Config& config, const SupervisionSet& set);

    // Restores the full training state. The checkpoint's config hash must
    // match this trainer's config.
    void restore(const Checkpoint& ck);
    Checkpoint checkpoint() const;

    IterationLog step();
    std::uint64_t iteration() const { return iteration_; }

    const AvatarModel& model() const { return model_; }
    const FlowBank& flows() const { return flows_; }
    const PatchDiscriminator& discriminator() const { return dis_; }
    const ParamGroup& group(GroupId id) const { return groups_[static_cast<int>(id)]; }

    // Poses used by iteration i: (source pose index, tar subsample index).
    std::pair<int, int> schedule(std::uint64_t i) const;

private:
    struct PoseCache {
        PositionMap posed;
        SkinningField field;
    };

    LossBreakdown branch_pass(Branch b, int pose, int tar_slot, std::vector<double>& grad_branch,
                              std::vector<double>& grad_net, std::vector<double>& grad_flows,
                              std::vector<double>& grad_dis, std::uint64_t patch_seed) const;

    Config config_;
    const SupervisionSet& set_;
    AvatarModel model_;
    FlowBank flows_;
    PatchDiscriminator dis_;
    std::array<ParamGroup, 5> groups_;
    std::vector<PoseCache> poses_;
    std::uint64_t iteration_ = 0;
    // Dense flow gradient buffer, zeroed per iteration.
    std::vector<double> flow_grad_;
};

// Flattens a flow bank into one parameter vector and back.
std::vector<double> flatten(const FlowBank& bank);
void unflatten(std::span<const double> values, FlowBank& bank);

// Rebuilds the model, flows and discriminator from a checkpoint without a
// dataset (the rig is regenerated from the stored seed).
struct FittedState {
    Config config;
    AvatarModel model;
    FlowBank flows;
    std::uint64_t iteration = 0;
};
FittedState load_fitted(const Checkpoint& ck);

struct FitOptions {
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> resume;  // checkpoint to continue from
    std::function<void(const IterationLog&)> progress;
};

// Trains to config.iterations. Writes out_dir/log.csv (tar branch),
// out_dir/log_src.csv, out_dir/checkpoint.drck and, every checkpoint_every
// iterations, out_dir/checkpoint_<iter>.drck. On resume the logs are cut back
// to the checkpoint's iteration before training continues.
FittedState fit(const Config& config, const SupervisionSet& set, const FitOptions& options);

// Renders the tar branch at every (pose, view) and scores it against the
// ideal try-on; SC-proxy over consecutive poses of each view; flow error
// against the recorded jitter.
MetricReport evaluate(const AvatarModel& model, const FlowBank* flows, const SupervisionSet& set,
                      const std::string& label);
// The same metrics on the ideal try-on frames themselves (SC-proxy baseline).
MetricReport evaluate_ground_truth(const SupervisionSet& set);

// Correspondences between consecutive poses for one view (pose t -> t+1).
std::vector<Correspondence> sequence_correspondences(const SupervisionSet& set, int view);

}  // namespace drape
