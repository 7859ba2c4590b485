#include "drape/trainer.hpp"

#include "drape/renderer.hpp"
#include "drape/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace drape {

namespace {

// Composed-map channels penalized by the regularizer: position offsets,
// opacity and color. Rotation and log-scale have non-zero rest values.
constexpr std::array<int, 7> kRegChannels{kRawPosition, kRawPosition + 1, kRawPosition + 2, kRawOpacity,
                                          kRawColor,    kRawColor + 1,    kRawColor + 2};

constexpr std::uint64_t kStreamNet = 10;
constexpr std::uint64_t kStreamDis = 11;
constexpr std::uint64_t kStreamPatches = 1000000;
constexpr std::uint64_t kStreamSrcOrder = 2000000;
constexpr std::uint64_t kStreamTarOrder = 3000000;

// Fisher-Yates on raw mt19937_64 draws, so the order does not depend on the
// standard library's distribution implementations.
std::vector<int> permutation(int n, std::uint64_t seed) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[i] = i;
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(p[i], p[j]);
    }
    return p;
}

void axpy(Image& y, double a, const Image& x) {
    auto& yd = y.data();
    const auto& xd = x.data();
    for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += a * xd[i];
}

void add_scaled(std::vector<double>& y, double a, std::span<const double> x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void check_term(double v, const char* term, Branch b, int view, std::uint64_t iteration) {
    if (std::isfinite(v)) return;
    std::ostringstream s;
    s << "non-finite loss term '" << term << "' = " << v << " at iteration " << iteration << " (branch "
      << branch_name(b) << ", view " << view << ")";
    throw std::runtime_error(s.str());
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_dataset(const Config& c, const SupervisionSet& set) {
    const SynthConfig& a = c.data;
    const SynthConfig& b = set.config;
    if (a.seed != b.seed || a.views != b.views || a.poses != b.poses || a.resolution != b.resolution ||
        a.subsample != b.subsample || a.uv_size != b.uv_size) {
        throw ValidationError("config dataset keys (seed, views, poses, resolution, subsample, uv_size) "
                              "do not match the dataset");
    }
}

// Rewrites `path` keeping the header and rows whose iteration is < `keep`.
void truncate_log(const std::filesystem::path& path, std::uint64_t keep) {
    std::vector<std::string> rows;
    {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot resume: missing log " + path.string());
        std::string line;
        std::getline(in, line);
        if (line != kLogHeader) throw ValidationError("cannot resume: unexpected log header in " + path.string());
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const std::uint64_t it = std::stoull(line.substr(0, line.find(',')));
            if (it < keep) rows.push_back(line);
        }
    }
    if (rows.size() != keep) throw ValidationError("cannot resume: log " + path.string() + " is missing rows");
    std::ofstream out(path, std::ios::trunc);
    out << kLogHeader << '\n';
    for (const auto& r : rows) out << r << '\n';
}

}  // namespace

AvatarModel AvatarModel::initial(const Config& config, const AvatarRig& rig) {
    config.validate();
    AvatarModel m;
    m.config = config;
    m.rig = rig;
    const Vec3 color = Vec3::Constant(config.init_color);
    m.src = BranchField::initial(Branch::src, rig.canonical, config.init_scale, config.init_opacity, color);
    m.tar = BranchField::initial(Branch::tar, rig.canonical, config.init_scale, config.init_opacity, color);
    m.net = OffsetNetwork(rig.canonical.height, rig.canonical.width, config.hidden, config.embedding,
                          derive_seed(config.data.seed, kStreamNet));
    return m;
}

PosedAvatar AvatarModel::build(Branch b, const Pose& pose, const Camera& camera) const {
    return build_avatar(branch(b), config.enable_nld ? &net : nullptr, rig, pose, camera, config.ranges);
}

Image AvatarModel::render(Branch b, const Pose& pose, const Camera& camera, const Vec3& background) const {
    const PosedAvatar posed = build(b, pose, camera);
    return drape::render(posed.primitives, camera, background).raster.image;
}

std::string log_row(std::uint64_t iteration, const LossBreakdown& t) {
    std::string s = std::to_string(iteration);
    for (double v : {t.l1, t.lp, t.lreg, t.ladv_gen, t.ladv_dis, t.flow_reg, t.total}) {
        s += ',';
        s += fmt17(v);
    }
    return s;
}

std::vector<double> flatten(const FlowBank& bank) {
    std::vector<double> out;
    out.reserve(bank.size() * static_cast<std::size_t>(bank.height) * bank.width * 2);
    for (const auto& f : bank.flows) out.insert(out.end(), f.data().begin(), f.data().end());
    return out;
}

void unflatten(std::span<const double> values, FlowBank& bank) {
    std::size_t at = 0;
    for (auto& f : bank.flows) {
        if (at + f.size() > values.size()) throw ValidationError("flow vector is too short for the bank");
        std::copy_n(values.begin() + at, f.size(), f.data().begin());
        at += f.size();
    }
    if (at != values.size()) throw ValidationError("flow vector is too long for the bank");
}

Trainer::Trainer(const Config& config, const SupervisionSet& set) : config_(config), set_(set) {
    config_.validate();
    check_dataset(config_, set_);
    model_ = AvatarModel::initial(config_, set_.subject.rig);
    flows_ = FlowBank(set_.degraded.size(), config_.data.resolution, config_.data.resolution);
    dis_ = PatchDiscriminator(derive_seed(config_.data.seed, kStreamDis));
    auto make = [&](GroupId id, std::size_t n) { return ParamGroup(id, n, config_.settings(id)); };
    groups_[0] = make(GroupId::branch_src, model_.src.raw.data.size());
    groups_[1] = make(GroupId::branch_tar, model_.tar.raw.data.size());
    groups_[2] = make(GroupId::nld, model_.net.parameters().size());
    flow_grad_.assign(flows_.size() * config_.data.resolution * config_.data.resolution * 2, 0.0);
    groups_[3] = make(GroupId::flows, flow_grad_.size());
    groups_[4] = make(GroupId::discriminator, dis_.parameters().size());
    if (!config_.enable_nld) groups_[2].freeze();
    if (!config_.enable_rfr) groups_[3].freeze();
    if (!config_.enable_adv) groups_[4].freeze();

    const AvatarRig& rig = model_.rig;
    poses_.reserve(set_.poses.size());
    for (const Pose& p : set_.poses) {
        LbsResult lbs = lbs_transform(rig.canonical, rig.weights, skinning_transforms(rig.skeleton, p));
        poses_.push_back({std::move(lbs.posed), std::move(lbs.field)});
    }
}

std::pair<int, int> Trainer::schedule(std::uint64_t i) const {
    const int poses = static_cast<int>(set_.poses.size());
    const int k = static_cast<int>(set_.tar_poses.size());
    const auto src = permutation(poses, derive_seed(config_.data.seed, kStreamSrcOrder + i / poses));
    const auto tar = permutation(k, derive_seed(config_.data.seed, kStreamTarOrder + i / k));
    return {src[i % poses], tar[i % k]};
}

LossBreakdown Trainer::branch_pass(Branch b, int pose, int tar_slot, std::vector<double>& grad_branch,
                                   std::vector<double>& grad_net, std::vector<double>& grad_flows,
                                   std::vector<double>& grad_dis, std::uint64_t patch_seed) const {
    const BranchField& field = model_.branch(b);
    const LossWeights& w = config_.weights;
    const int views = set_.views();
    const double inv_v = 1.0 / views;
    const Vec3 bg = set_.background();
    const bool nld = config_.enable_nld;
    const bool rfr = b == Branch::tar && config_.enable_rfr;
    const bool adv = b == Branch::tar && config_.enable_adv;
    LossBreakdown mean;

    for (int v = 0; v < views; ++v) {
        const Camera& cam = set_.cameras[v];
        OffsetNetwork::Cache cache;
        RawGrid offsets;
        if (nld) offsets = model_.net.forward(poses_[pose].posed, cam.forward(), &cache);
        const ComposedAvatar avatar = compose(field, offsets, model_.rig.canonical, config_.ranges);
        const PosedAvatar posed = pose_avatar(avatar, poses_[pose].field);
        const SceneRender scene = render(posed.primitives, cam, bg);
        const Image& image = scene.raster.image;

        std::size_t frame = 0;
        WarpOp op;
        Image target;
        if (b == Branch::src) {
            target = set_.source[set_.source_index(pose, v)];
        } else {
            frame = set_.tar_index(tar_slot, v);
            target = rfr ? op.forward(set_.degraded[frame], flows_.flows[frame]) : set_.degraded[frame];
        }

        const ImageLoss l1 = l1_loss(image, target);
        const ImageLoss lp = perceptual_proxy(image, target);
        std::vector<double> entries;
        entries.reserve(avatar.texel.size() * kRegChannels.size());
        for (int t : avatar.texel)
            for (int c : kRegChannels) entries.push_back(avatar.composed.texel(t)[c]);
        const VectorLoss reg = reg_loss(entries);

        LossBreakdown terms;
        terms.l1 = l1.value;
        terms.lp = lp.value;
        terms.lreg = reg.value;
        Image grad = l1.grad;
        axpy(grad, w.perceptual, lp.grad);

        if (rfr) {
            const FlowRegularization fr = flow_regularizer(flows_.flows[frame], w.tv, w.mag);
            terms.flow_reg = fr.value;
            // L1 and the edge proxy depend on render - target only.
            Image grad_target = grad;
            for (double& g : grad_target.data()) g = -g;
            const WarpOp::Grads wg = op.backward(grad_target);
            const std::size_t base = frame * wg.flow.size();
            for (std::size_t k = 0; k < wg.flow.size(); ++k) {
                grad_flows[base + k] += inv_v * (wg.flow.data()[k] + fr.grad.data()[k]);
            }
        }
        if (adv) {
            std::mt19937_64 rng(derive_seed(patch_seed, static_cast<std::uint64_t>(v)));
            const std::uint64_t span_x = static_cast<std::uint64_t>(image.width() - PatchDiscriminator::kPatch + 1);
            const std::uint64_t span_y = static_cast<std::uint64_t>(image.height() - PatchDiscriminator::kPatch + 1);
            std::vector<std::pair<int, int>> at;
            std::vector<Image> real, fake;
            for (int p = 0; p < config_.patches; ++p) {
                const int x = static_cast<int>(rng() % span_x);
                const int y = static_cast<int>(rng() % span_y);
                at.emplace_back(x, y);
                // The unrectified supervision is the "real" sample.
                real.push_back(extract_patch(set_.degraded[frame], x, y));
                fake.push_back(extract_patch(image, x, y));
            }
            const AdversarialTerms a = adversarial_losses(dis_, real, fake);
            terms.ladv_gen = a.gen;
            terms.ladv_dis = a.dis;
            for (std::size_t p = 0; p < at.size(); ++p) {
                Image g = a.grad_fake[p];
                for (double& x : g.data()) x *= w.adv;
                scatter_patch(grad, g, at[p].first, at[p].second);
            }
            add_scaled(grad_dis, inv_v, a.grad_dis);
        }
        total_loss(terms, w);
        for (const auto& [value, name] : {std::pair{terms.l1, "l1"}, {terms.lp, "lp"}, {terms.lreg, "lreg"},
                                          {terms.ladv_gen, "ladv_gen"}, {terms.ladv_dis, "ladv_dis"},
                                          {terms.flow_reg, "flow_reg"}, {terms.total, "total"}}) {
            check_term(value, name, b, v, iteration_);
        }

        for (double& g : grad.data()) g *= inv_v;
        const auto prim = render_backward(scene, posed.primitives, cam, grad);
        const auto canon = pose_avatar_backward(avatar, posed, poses_[pose].field, prim);
        RawGrid grad_composed(field.raw.height, field.raw.width);
        std::size_t e = 0;
        for (int t : avatar.texel)
            for (int c : kRegChannels) grad_composed.texel(t)[c] = inv_v * w.reg * reg.grad[e++];
        const ComposeGrad cg = compose_backward(field, offsets, avatar, config_.ranges, canon, grad_composed);
        add_scaled(grad_branch, 1.0, cg.branch.data);
        if (nld) model_.net.backward(cache, cg.offsets, grad_net);

        mean.l1 += inv_v * terms.l1;
        mean.lp += inv_v * terms.lp;
        mean.lreg += inv_v * terms.lreg;
        mean.ladv_gen += inv_v * terms.ladv_gen;
        mean.ladv_dis += inv_v * terms.ladv_dis;
        mean.flow_reg += inv_v * terms.flow_reg;
        mean.total += inv_v * terms.total;
    }
    return mean;
}

IterationLog Trainer::step() {
    const std::uint64_t i = iteration_;
    const auto [src_pose, tar_slot] = schedule(i);
    const int tar_pose = set_.tar_poses[tar_slot];
    const std::uint64_t patch_seed = derive_seed(config_.data.seed, kStreamPatches + i);

    std::vector<double> g_src(model_.src.raw.data.size(), 0.0);
    std::vector<double> g_tar(model_.tar.raw.data.size(), 0.0);
    std::vector<double> g_net(model_.net.parameters().size(), 0.0);
    std::vector<double> g_dis(dis_.parameters().size(), 0.0);
    std::fill(flow_grad_.begin(), flow_grad_.end(), 0.0);

    IterationLog log;
    log.iteration = i;
    log.src = branch_pass(Branch::src, src_pose, 0, g_src, g_net, flow_grad_, g_dis, patch_seed);
    log.tar = branch_pass(Branch::tar, tar_pose, tar_slot, g_tar, g_net, flow_grad_, g_dis, patch_seed);

    // Every gradient above was taken at the same parameters; the groups are
    // disjoint, so the generator and discriminator updates do not interact.
    groups_[0].step(model_.src.raw.data, g_src);
    groups_[1].step(model_.tar.raw.data, g_tar);
    groups_[2].step(model_.net.parameters(), g_net);
    if (!groups_[3].frozen()) {
        std::vector<double> flat = flatten(flows_);
        groups_[3].step(flat, flow_grad_);
        unflatten(flat, flows_);
    }
    groups_[4].step(dis_.parameters(), g_dis);
    ++iteration_;
    return log;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ck;
    ck.texts["format"] = "drape-checkpoint";
    ck.texts["config"] = config_.to_text();
    ck.texts["config_hash"] = hex64(config_.hash());
    ck.put_scalar("iteration", static_cast<double>(iteration_));
    ck.put("branch/src", model_.src.raw.data);
    ck.put("branch/tar", model_.tar.raw.data);
    ck.put("nld", model_.net.parameters());
    ck.put("flows", flatten(flows_));
    ck.put("discriminator", dis_.parameters());
    for (const ParamGroup& g : groups_) {
        const std::string base = std::string("adam/") + g.name();
        ck.put(base + "/m", g.first_moment());
        ck.put(base + "/v", g.second_moment());
        ck.put_scalar(base + "/steps", static_cast<double>(g.steps()));
    }
    return ck;
}

void Trainer::restore(const Checkpoint& ck) {
    if (ck.text("config_hash") != hex64(config_.hash())) {
        throw ValidationError("checkpoint was written with a different config (hash " + ck.text("config_hash") +
                              ", expected " + hex64(config_.hash()) + ")");
    }
    ck.get("branch/src", model_.src.raw.data);
    ck.get("branch/tar", model_.tar.raw.data);
    ck.get("nld", model_.net.parameters());
    std::vector<double> flat(flow_grad_.size());
    ck.get("flows", flat);
    unflatten(flat, flows_);
    ck.get("discriminator", dis_.parameters());
    for (ParamGroup& g : groups_) {
        const std::string base = std::string("adam/") + g.name();
        ck.get(base + "/m", g.first_moment());
        ck.get(base + "/v", g.second_moment());
        g.set_steps(static_cast<std::uint64_t>(ck.scalar(base + "/steps")));
    }
    iteration_ = static_cast<std::uint64_t>(ck.scalar("iteration"));
}

FittedState load_fitted(const Checkpoint& ck) {
    if (ck.texts.count("format") == 0 || ck.text("format") != "drape-checkpoint") {
        throw ValidationError("not a drape checkpoint");
    }
    FittedState s;
    s.config = parse_config(ck.text("config"));
    if (hex64(s.config.hash()) != ck.text("config_hash")) throw ValidationError("checkpoint config hash mismatch");
    const Subject subject = generate_subject(s.config.data.seed, s.config.data.uv_size);
    s.model = AvatarModel::initial(s.config, subject.rig);
    ck.get("branch/src", s.model.src.raw.data);
    ck.get("branch/tar", s.model.tar.raw.data);
    ck.get("nld", s.model.net.parameters());
    const int res = s.config.data.resolution;
    s.flows = FlowBank(static_cast<std::size_t>(s.config.data.subsample) * s.config.data.views, res, res);
    const Tensor& flows = ck.tensor("flows");
    unflatten(flows.data, s.flows);
    s.iteration = static_cast<std::uint64_t>(ck.scalar("iteration"));
    return s;
}

FittedState fit(const Config& config, const SupervisionSet& set, const FitOptions& options) {
    config.validate();
    set_thread_count(config.threads);
    std::filesystem::create_directories(options.out_dir);
    const auto tar_log = options.out_dir / "log.csv";
    const auto src_log = options.out_dir / "log_src.csv";

    Trainer trainer(config, set);
    if (options.resume) {
        trainer.restore(load_checkpoint(*options.resume));
        if (trainer.iteration() > static_cast<std::uint64_t>(config.iterations)) {
            throw ValidationError("checkpoint is already past the configured iteration count");
        }
        truncate_log(tar_log, trainer.iteration());
        truncate_log(src_log, trainer.iteration());
    } else {
        for (const auto& p : {tar_log, src_log}) {
            std::ofstream out(p, std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + p.string());
            out << kLogHeader << '\n';
        }
    }
    std::ofstream tar_out(tar_log, std::ios::app);
    std::ofstream src_out(src_log, std::ios::app);
    while (trainer.iteration() < static_cast<std::uint64_t>(config.iterations)) {
        const IterationLog log = trainer.step();
        tar_out << log_row(log.iteration, log.tar) << '\n';
        src_out << log_row(log.iteration, log.src) << '\n';
        if (options.progress) options.progress(log);
        if (config.checkpoint_every > 0 && trainer.iteration() % config.checkpoint_every == 0) {
            tar_out.flush();
            src_out.flush();
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_%06llu.drck",
                          static_cast<unsigned long long>(trainer.iteration()));
            save_checkpoint(options.out_dir / name, trainer.checkpoint());
        }
    }
    tar_out.flush();
    src_out.flush();
    save_checkpoint(options.out_dir / "checkpoint.drck", trainer.checkpoint());

    FittedState s;
    s.config = config;
    s.model = trainer.model();
    s.flows = trainer.flows();
    s.iteration = trainer.iteration();
    return s;
}

std::vector<Correspondence> sequence_correspondences(const SupervisionSet& set, int view) {
    std::vector<Correspondence> out;
    for (std::size_t p = 0; p + 1 < set.poses.size(); ++p) {
        out.push_back(gt_correspondence(set.subject, set.cameras.at(view), set.poses[p], set.poses[p + 1]));
    }
    return out;
}

namespace {

MetricReport score_frames(const std::vector<Image>& frames, const SupervisionSet& set, const std::string& label) {
    MetricReport r;
    r.variant = label;
    const int views = set.views();
    const int poses = static_cast<int>(set.poses.size());
    for (int p = 0; p < poses; ++p)
        for (int v = 0; v < views; ++v) {
            const std::size_t idx = set.source_index(p, v);
            r.frames.push_back({p, v, psnr(frames[idx], set.ideal[idx]), ssim(frames[idx], set.ideal[idx])});
        }
    for (int v = 0; v < views; ++v) {
        std::vector<Image> seq;
        for (int p = 0; p < poses; ++p) seq.push_back(frames[set.source_index(p, v)]);
        const auto corr = sequence_correspondences(set, v);
        const auto pairs = consistency_pairs(seq, corr);
        r.consistency.insert(r.consistency.end(), pairs.begin(), pairs.end());
    }
    return r;
}

}  // namespace

MetricReport evaluate(const AvatarModel& model, const FlowBank* flows, const SupervisionSet& set,
                      const std::string& label) {
    std::vector<Image> frames;
    for (std::size_t p = 0; p < set.poses.size(); ++p)
        for (const Camera& cam : set.cameras) frames.push_back(model.render(Branch::tar, set.poses[p], cam, set.background()));
    MetricReport r = score_frames(frames, set, label);
    if (flows && !set.jitter.empty()) r.flow_error = flow_recovery_error(*flows, set.jitter);
    return r;
}

MetricReport evaluate_ground_truth(const SupervisionSet& set) {
    return score_frames(set.ideal, set, "ground_truth");
}

}  // namespace drape
