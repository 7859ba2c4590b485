#include "drape/dataset.hpp"

#include "drape/image_io.hpp"
#include "drape/tensor_io.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace drape {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "drape-dataset";
constexpr int kVersion = 1;

std::string frame_name(const char* dir, int a, int v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s/f_%03d_%d.png", dir, a, v);
    return buf;
}

std::uint64_t file_hash(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(bytes);
}

Tensor flows_tensor(const std::vector<JitterRecord>& recs, bool inverse) {
    if (recs.empty()) return Tensor(0, 1, 2);
    const auto& f0 = recs[0].warp;
    Tensor t(static_cast<std::uint32_t>(recs.size()), static_cast<std::uint32_t>(f0.height() * f0.width()), 2);
    std::size_t at = 0;
    for (const auto& r : recs) {
        const auto& d = inverse ? r.inverse.data() : r.warp.data();
        std::copy(d.begin(), d.end(), t.data.begin() + at);
        at += d.size();
    }
    return t;
}

void check(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("dataset: " + what);
}

json config_json(const SynthConfig& c) {
    return {{"seed", c.seed},          {"views", c.views},
            {"poses", c.poses},        {"resolution", c.resolution},
            {"subsample", c.subsample}, {"uv_size", c.uv_size},
            {"jitter", c.jitter},      {"color_jitter", c.color_jitter},
            {"camera_radius", c.camera_radius}, {"focal", c.focal}};
}

SynthConfig config_from_json(const json& j) {
    SynthConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.views = j.at("views").get<int>();
    c.poses = j.at("poses").get<int>();
    c.resolution = j.at("resolution").get<int>();
    c.subsample = j.at("subsample").get<int>();
    c.uv_size = j.at("uv_size").get<int>();
    c.jitter = j.at("jitter").get<double>();
    c.color_jitter = j.at("color_jitter").get<bool>();
    c.camera_radius = j.at("camera_radius").get<double>();
    c.focal = j.at("focal").get<double>();
    return c;
}

}  // namespace

void SynthConfig::validate() const {
    if (views < 1) throw ValidationError("views must be >= 1");
    if (poses < 2) throw ValidationError("poses must be >= 2");
    if (resolution < 32) throw ValidationError("resolution must be >= 32");
    if (subsample < 1 || subsample > poses) throw ValidationError("subsample must satisfy 1 <= k <= poses");
    if (uv_size < 32 || uv_size % 16 != 0) throw ValidationError("uv_size must be a multiple of 16 and >= 32");
    if (!std::isfinite(jitter) || jitter < 0.0) throw ValidationError("jitter must be finite and >= 0");
    if (!(camera_radius > 0.5)) throw ValidationError("camera_radius must be > 0.5");
    if (!(focal > 0.0)) throw ValidationError("focal must be > 0");
}

SupervisionSet synthesize(const SynthConfig& config) {
    config.validate();
    SupervisionSet set;
    set.config = config;
    set.subject = generate_subject(config.seed, config.uv_size);
    set.garment = target_garment(set.subject);
    set.cameras = camera_ring(config.views, config.resolution, config.camera_radius,
                              config.scaled_focal());
    set.poses = pose_sequence(config.poses);
    set.tar_poses = subsample_poses(config.poses, config.subsample);

    set.source = render_dataset(set.subject, set.cameras, set.poses, set.background());
    for (Image& im : set.source) im = quantize8(im);
    set.ideal = render_dataset(set.subject, set.cameras, set.poses, set.background(), &set.garment);
    for (Image& im : set.ideal) im = quantize8(im);

    std::vector<std::pair<int, int>> frames;
    for (int p : set.tar_poses)
        for (int v = 0; v < config.views; ++v) frames.emplace_back(p, v);
    DegradeOptions opt;
    opt.magnitude = config.jitter;
    opt.color_jitter = config.color_jitter;
    opt.seed = derive_seed(config.seed, 2);
    DegradeResult d = degrade(set.subject, set.garment, set.cameras, set.poses, frames, set.background(), opt);
    set.degraded = std::move(d.degraded);
    set.jitter = std::move(d.records);
    return set;
}

void write_dataset(const fs::path& dir, const SupervisionSet& set) {
    const SynthConfig& c = set.config;
    for (const char* sub : {"source", "degraded", "ideal", "rig", "jitter"}) fs::create_directories(dir / sub);
    std::vector<std::string> files;
    const int v = set.views();

    for (int p = 0; p < c.poses; ++p)
        for (int k = 0; k < v; ++k) {
            files.push_back(frame_name("source", p, k));
            write_png(dir / files.back(), set.source[set.source_index(p, k)]);
            files.push_back(frame_name("ideal", p, k));
            write_png(dir / files.back(), set.ideal[set.source_index(p, k)]);
        }
    for (std::size_t i = 0; i < set.tar_poses.size(); ++i)
        for (int k = 0; k < v; ++k) {
            files.push_back(frame_name("degraded", static_cast<int>(i), k));
            write_png(dir / files.back(), set.degraded[set.tar_index(static_cast<int>(i), k)]);
        }

    const AvatarRig& rig = set.subject.rig;
    const int joints = rig.skeleton.joint_count();
    const std::size_t texels = rig.canonical.texel_count();
    auto save = [&](const std::string& name, const Tensor& t) {
        files.push_back(name);
        save_tensor(dir / name, t);
    };
    {
        Tensor t(static_cast<std::uint32_t>(joints), 4);
        for (int j = 0; j < joints; ++j) {
            t.data[j * 4] = rig.skeleton.parent[j];
            for (int a = 0; a < 3; ++a) t.data[j * 4 + 1 + a] = rig.skeleton.rest_offset[j][a];
        }
        save("rig/skeleton.drt", t);
    }
    {
        Tensor t(static_cast<std::uint32_t>(rig.canonical.height), static_cast<std::uint32_t>(rig.canonical.width), 4);
        for (std::size_t i = 0; i < texels; ++i) {
            for (int a = 0; a < 3; ++a) t.data[i * 4 + a] = rig.canonical.position[i][a];
            t.data[i * 4 + 3] = rig.canonical.valid[i];
        }
        save("rig/template.drt", t);
    }
    save("rig/weights.drt", Tensor({static_cast<std::uint32_t>(rig.weights.height),
                                    static_cast<std::uint32_t>(rig.weights.width),
                                    static_cast<std::uint32_t>(joints)},
                                   rig.weights.weight));
    {
        Tensor t(static_cast<std::uint32_t>(v), 18);
        for (int k = 0; k < v; ++k) {
            const Camera& cam = set.cameras[k];
            double* d = t.data.data() + k * 18;
            d[0] = cam.fx; d[1] = cam.fy; d[2] = cam.cx; d[3] = cam.cy;
            for (int r = 0; r < 3; ++r)
                for (int q = 0; q < 3; ++q) d[4 + r * 3 + q] = cam.rotation(r, q);
            for (int a = 0; a < 3; ++a) d[13 + a] = cam.translation[a];
            d[16] = cam.width; d[17] = cam.height;
        }
        save("views.drt", t);
    }
    {
        Tensor t(static_cast<std::uint32_t>(c.poses), static_cast<std::uint32_t>(joints + 1), 4);
        for (int p = 0; p < c.poses; ++p) {
            double* d = t.data.data() + static_cast<std::size_t>(p) * (joints + 1) * 4;
            for (int j = 0; j < joints; ++j) {
                const Quat& q = set.poses[p].local_rotation[j];
                d[j * 4] = q.w; d[j * 4 + 1] = q.x; d[j * 4 + 2] = q.y; d[j * 4 + 3] = q.z;
            }
            for (int a = 0; a < 3; ++a) d[joints * 4 + a] = set.poses[p].root_translation[a];
        }
        save("poses.drt", t);
    }
    save("jitter/warp.drt", flows_tensor(set.jitter, false));
    save("jitter/inverse.drt", flows_tensor(set.jitter, true));
    {
        const std::uint32_t n = static_cast<std::uint32_t>(set.jitter.size());
        const std::uint32_t px = static_cast<std::uint32_t>(c.resolution * c.resolution);
        Tensor mask(n, px), color(n, 6);
        for (std::uint32_t i = 0; i < n; ++i) {
            const auto& r = set.jitter[i];
            for (std::uint32_t k = 0; k < px; ++k) mask.data[static_cast<std::size_t>(i) * px + k] = r.garment[k];
            for (int a = 0; a < 3; ++a) {
                color.data[i * 6 + a] = r.gain[a];
                color.data[i * 6 + 3 + a] = r.offset[a];
            }
        }
        save("jitter/garment_mask.drt", mask);
        save("jitter/color.drt", color);
    }

    json manifest;
    manifest["format"] = kFormat;
    manifest["version"] = kVersion;
    manifest["config"] = config_json(c);
    manifest["counts"] = {{"source", set.source.size()}, {"degraded", set.degraded.size()},
                          {"ideal", set.ideal.size()}, {"jitter", set.jitter.size()}};
    manifest["tar_poses"] = set.tar_poses;
    manifest["frame_order"] = "pose-major: index = pose * views + view";
    json hashes = json::object();
    for (const auto& f : files) hashes[f] = hex64(file_hash(dir / f));
    manifest["files"] = hashes;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
}

SupervisionSet read_dataset(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ValidationError("dataset: missing manifest.json in " + dir.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("dataset: malformed manifest: ") + e.what());
    }
    check(manifest.value("format", "") == kFormat, "unknown format");
    check(manifest.value("version", 0) == kVersion, "unsupported version");
    for (const auto& [name, hash] : manifest.at("files").items()) {
        check(fs::exists(dir / name), "missing file " + name);
        check(hex64(file_hash(dir / name)) == hash.get<std::string>(), "hash mismatch for " + name);
    }

    SupervisionSet set;
    set.config = config_from_json(manifest.at("config"));
    set.config.validate();
    const SynthConfig& c = set.config;
    set.tar_poses = manifest.at("tar_poses").get<std::vector<int>>();
    check(static_cast<int>(set.tar_poses.size()) == c.subsample, "tar pose count");

    set.subject = generate_subject(c.seed, c.uv_size);
    set.garment = target_garment(set.subject);
    AvatarRig& rig = set.subject.rig;
    const Tensor tmpl = load_tensor(dir / "rig/template.drt");
    check(tmpl.data.size() == rig.canonical.texel_count() * 4, "template shape");
    for (std::size_t i = 0; i < rig.canonical.texel_count(); ++i) {
        for (int a = 0; a < 3; ++a) check(tmpl.data[i * 4 + a] == rig.canonical.position[i][a], "template differs from the seed");
        check(tmpl.data[i * 4 + 3] == rig.canonical.valid[i], "template mask differs from the seed");
    }
    const Tensor w = load_tensor(dir / "rig/weights.drt");
    check(w.data == rig.weights.weight, "skin weights differ from the seed");
    const Tensor sk = load_tensor(dir / "rig/skeleton.drt");
    check(sk.shape[0] == static_cast<std::uint32_t>(rig.skeleton.joint_count()), "skeleton shape");

    const Tensor views = load_tensor(dir / "views.drt");
    check(views.shape[0] == static_cast<std::uint32_t>(c.views) && views.shape[1] == 18, "camera tensor shape");
    for (int k = 0; k < c.views; ++k) {
        const double* d = views.data.data() + k * 18;
        Camera cam;
        cam.fx = d[0]; cam.fy = d[1]; cam.cx = d[2]; cam.cy = d[3];
        for (int r = 0; r < 3; ++r)
            for (int q = 0; q < 3; ++q) cam.rotation(r, q) = d[4 + r * 3 + q];
        for (int a = 0; a < 3; ++a) cam.translation[a] = d[13 + a];
        cam.width = static_cast<int>(d[16]);
        cam.height = static_cast<int>(d[17]);
        cam.validate();
        set.cameras.push_back(cam);
    }
    const int joints = rig.skeleton.joint_count();
    const Tensor poses = load_tensor(dir / "poses.drt");
    check(poses.shape[0] == static_cast<std::uint32_t>(c.poses) &&
              poses.shape[1] == static_cast<std::uint32_t>(joints + 1),
          "pose tensor shape");
    for (int p = 0; p < c.poses; ++p) {
        const double* d = poses.data.data() + static_cast<std::size_t>(p) * (joints + 1) * 4;
        Pose pose = Pose::identity(joints);
        for (int j = 0; j < joints; ++j) pose.local_rotation[j] = {d[j * 4], d[j * 4 + 1], d[j * 4 + 2], d[j * 4 + 3]};
        for (int a = 0; a < 3; ++a) pose.root_translation[a] = d[joints * 4 + a];
        pose.validate(joints);
        set.poses.push_back(pose);
    }

    const int v = c.views;
    for (int p = 0; p < c.poses; ++p)
        for (int k = 0; k < v; ++k) {
            set.source.push_back(read_png(dir / frame_name("source", p, k)));
            set.ideal.push_back(read_png(dir / frame_name("ideal", p, k)));
        }
    for (int i = 0; i < c.subsample; ++i)
        for (int k = 0; k < v; ++k) set.degraded.push_back(read_png(dir / frame_name("degraded", i, k)));
    for (const auto* frames : {&set.source, &set.ideal, &set.degraded})
        for (const Image& im : *frames)
            check(im.height() == c.resolution && im.width() == c.resolution, "frame resolution");

    const Tensor warp = load_tensor(dir / "jitter/warp.drt");
    const Tensor inv = load_tensor(dir / "jitter/inverse.drt");
    const Tensor mask = load_tensor(dir / "jitter/garment_mask.drt");
    const Tensor color = load_tensor(dir / "jitter/color.drt");
    const std::size_t n = set.degraded.size();
    const std::size_t px = static_cast<std::size_t>(c.resolution) * c.resolution;
    check(warp.shape[0] == n && inv.shape[0] == n && mask.shape[0] == n && color.shape[0] == n, "jitter count");
    check(warp.data.size() == n * px * 2 && inv.data.size() == n * px * 2 && mask.data.size() == n * px,
          "jitter shape");
    for (std::size_t i = 0; i < n; ++i) {
        JitterRecord r;
        r.warp = FlowField(c.resolution, c.resolution);
        r.inverse = FlowField(c.resolution, c.resolution);
        std::copy_n(warp.data.begin() + i * px * 2, px * 2, r.warp.data().begin());
        std::copy_n(inv.data.begin() + i * px * 2, px * 2, r.inverse.data().begin());
        r.garment.resize(px);
        for (std::size_t k = 0; k < px; ++k) r.garment[k] = mask.data[i * px + k] != 0.0;
        for (int a = 0; a < 3; ++a) {
            r.gain[a] = color.data[i * 6 + a];
            r.offset[a] = color.data[i * 6 + 3 + a];
        }
        set.jitter.push_back(std::move(r));
    }
    return set;
}

}  // namespace drape
