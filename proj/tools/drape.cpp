#include "drape/config.hpp"
#include "drape/dataset.hpp"
#include "drape/eval.hpp"
#include "drape/image_io.hpp"
#include "drape/synthdata.hpp"
#include "drape/trainer.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace drape;

namespace {

Config read_config(const std::string& path, const std::vector<std::string>& overrides) {
    Config c = path.empty() ? Config{} : load_config(path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
        set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    c.validate();
    return c;
}

std::string frame_file(const char* stem, int a, int b) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03d_%03d.png", stem, a, b);
    return buf;
}

int cmd_synth(const Config& c, const fs::path& out) {
    const SupervisionSet set = synthesize(c.data);
    write_dataset(out, set);
    read_dataset(out);  // validates the manifest that was just written
    std::cout << "wrote " << set.source.size() << " source and " << set.degraded.size() << " degraded frames to "
              << out.string() << "\n";
    return 0;
}

int cmd_fit(Config c, const std::string& variant, const fs::path& data, const fs::path& out,
            const std::string& resume) {
    if (!variant.empty()) c = apply_variant(c, variant);
    const SupervisionSet set = read_dataset(data);
    FitOptions opt;
    opt.out_dir = out;
    if (!resume.empty()) opt.resume = resume;
    const int every = std::max(1, c.iterations / 20);
    opt.progress = [every](const IterationLog& log) {
        if ((log.iteration + 1) % every != 0) return;
        std::printf("iter %6llu  tar l1 %.5f  total %.5f  src l1 %.5f\n",
                    static_cast<unsigned long long>(log.iteration + 1), log.tar.l1, log.tar.total, log.src.l1);
        std::fflush(stdout);
    };
    const FittedState s = fit(c, set, opt);
    std::cout << "variant " << variant_name(c) << ": " << s.iteration << " iterations, checkpoint "
              << (out / "checkpoint.drck").string() << "\n";
    return 0;
}

int cmd_render(const fs::path& checkpoint, const fs::path& out, const std::string& branch, int pose, int orbit,
               bool flows) {
    const FittedState s = load_fitted(load_checkpoint(checkpoint));
    const SynthConfig& d = s.config.data;
    const Branch b = branch == "src" ? Branch::src : Branch::tar;
    const auto poses = pose_sequence(d.poses);
    if (pose >= d.poses) throw ValidationError("--pose must be < " + std::to_string(d.poses));
    fs::create_directories(out);
    int written = 0;
    if (orbit > 0) {
        const auto cams = camera_ring(orbit, d.resolution, d.camera_radius, d.scaled_focal());
        const int p = std::max(pose, 0);
        for (int k = 0; k < orbit; ++k) {
            write_png(out / frame_file("orbit", p, k), s.model.render(b, poses[p], cams[k], Vec3::Zero()));
            ++written;
        }
    } else {
        const auto cams = camera_ring(d.views, d.resolution, d.camera_radius, d.scaled_focal());
        const int first = pose >= 0 ? pose : 0;
        const int last = pose >= 0 ? pose : d.poses - 1;
        for (int p = first; p <= last; ++p)
            for (int v = 0; v < d.views; ++v) {
                write_png(out / frame_file("frame", p, v), s.model.render(b, poses[p], cams[v], Vec3::Zero()));
                ++written;
            }
    }
    if (flows) {
        for (std::size_t f = 0; f < s.flows.size(); ++f) {
            write_png(out / frame_file("flow", static_cast<int>(f), 0),
                      flow_magnitude_heatmap(s.flows.flows[f], std::max(1.0, d.jitter)));
        }
    }
    std::cout << "rendered " << written << " frames (" << branch_name(b) << " branch) to " << out.string() << "\n";
    return 0;
}

int cmd_eval(const std::vector<std::string>& checkpoints, const fs::path& data, const fs::path& out,
             bool ground_truth) {
    const SupervisionSet set = read_dataset(data);
    std::vector<MetricReport> reports;
    if (ground_truth) reports.push_back(evaluate_ground_truth(set));
    for (const auto& path : checkpoints) {
        const FittedState s = load_fitted(load_checkpoint(path));
        if (s.config.data.seed != set.config.seed) throw ValidationError(path + " was fitted on a different dataset");
        reports.push_back(evaluate(s.model, &s.flows, set, variant_name(s.config)));
    }
    fs::create_directories(out);
    write_report_csv(out / "metrics.csv", reports);
    write_frame_csv(out / "frames.csv", reports);
    const std::string summary = report_summary(reports);
    std::ofstream(out / "summary.txt") << summary;
    std::cout << summary;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drape: animatable Gaussian avatars with garment transfer from inconsistent 2D supervision"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "override one config key (key=value); repeatable");

    std::string out, data, checkpoint, branch = "tar", variant;
    std::vector<std::string> checkpoints;
    int pose = -1, orbit = 0;
    bool flows = false, ground_truth = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic supervision set");
    synth->add_option("--out", out, "dataset directory")->required();

    auto* fitc = app.add_subcommand("fit", "train both branches, the offset network and the flows");
    fitc->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    fitc->add_option("--out", out, "run directory")->required();
    fitc->add_option("--variant", variant, "ablation")->check(CLI::IsMember({"full", "no_nld", "no_rfr", "no_adv"}));
    fitc->add_option("--checkpoint", checkpoint, "resume from this checkpoint")->check(CLI::ExistingFile);

    auto* renderc = app.add_subcommand("render", "render a fitted avatar");
    renderc->add_option("--checkpoint", checkpoint, "fitted checkpoint")->required()->check(CLI::ExistingFile);
    renderc->add_option("--out", out, "output directory")->required();
    renderc->add_option("--branch", branch, "src or tar")->check(CLI::IsMember({"src", "tar"}));
    renderc->add_option("--pose", pose, "pose index (default: every pose)")->check(CLI::NonNegativeNumber);
    renderc->add_option("--orbit", orbit, "render N views on a ring at one pose")->check(CLI::PositiveNumber);
    renderc->add_flag("--flows", flows, "also write flow-magnitude heatmaps");

    auto* evalc = app.add_subcommand("eval", "score fitted checkpoints against the ideal try-on");
    evalc->add_option("--checkpoint", checkpoints, "fitted checkpoint; repeatable")->check(CLI::ExistingFile);
    evalc->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    evalc->add_option("--out", out, "report directory")->required();
    evalc->add_flag("--ground-truth", ground_truth, "add the ground-truth baseline row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        const Config c = read_config(config_path, overrides);
        if (*synth) return cmd_synth(c, out);
        if (*fitc) return cmd_fit(c, variant, data, out, checkpoint);
        if (*renderc) return cmd_render(checkpoint, out, branch, pose, orbit, flows);
        if (*evalc) {
            if (checkpoints.empty() && !ground_truth) throw ValidationError("eval needs --checkpoint or --ground-truth");
            return cmd_eval(checkpoints, data, out, ground_truth);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
