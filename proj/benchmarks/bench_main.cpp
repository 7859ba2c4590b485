#include "drape/deformer.hpp"
#include "drape/flow.hpp"
#include "drape/renderer.hpp"
#include "drape/skeleton.hpp"
#include "drape/synthdata.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace drape;

namespace {

struct Scene {
    Subject subject;
    Camera camera;
    std::vector<GaussianPrimitive> primitives;
};

const Scene& scene(int resolution) {
    static std::map<int, Scene> cache;
    auto it = cache.find(resolution);
    if (it != cache.end()) return it->second;
    Scene s;
    s.subject = generate_subject(0, 64);
    s.camera = camera_ring(4, resolution, 3.2, 200.0 * resolution / 128.0)[1];
    s.primitives = subject_primitives(s.subject, pose_sequence(8)[3]);
    return cache.emplace(resolution, std::move(s)).first->second;
}

void BM_RenderForward(benchmark::State& state) {
    set_thread_count(1);
    const Scene& s = scene(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto r = render(s.primitives, s.camera, Vec3::Zero());
        benchmark::DoNotOptimize(r.raster.image.data().data());
    }
    state.counters["primitives"] = static_cast<double>(s.primitives.size());
}
BENCHMARK(BM_RenderForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
    set_thread_count(1);
    const Scene& s = scene(static_cast<int>(state.range(0)));
    const SceneRender r = render(s.primitives, s.camera, Vec3::Zero());
    Image grad(r.raster.image.height(), r.raster.image.width());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : grad.data()) v = u(rng);
    for (auto _ : state) {
        auto g = render_backward(r, s.primitives, s.camera, grad);
        benchmark::DoNotOptimize(g.data());
    }
}
BENCHMARK(BM_RenderBackward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_OffsetNetwork(benchmark::State& state) {
    set_thread_count(1);
    const Scene& s = scene(128);
    const auto& rig = s.subject.rig;
    const PositionMap posed = position_map(rig.canonical, rig.skeleton, rig.weights, pose_sequence(8)[3]);
    const OffsetNetwork net(rig.canonical.height, rig.canonical.width, static_cast<int>(state.range(0)), 4, 7);
    const bool backward = state.range(1) != 0;
    std::vector<double> grad(net.parameters().size());
    for (auto _ : state) {
        OffsetNetwork::Cache cache;
        RawGrid out = net.forward(posed, Vec3::UnitZ(), backward ? &cache : nullptr);
        if (backward) {
            std::fill(out.data.begin(), out.data.end(), 1e-3);
            net.backward(cache, out, grad);
        }
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_OffsetNetwork)->Args({64, 0})->Args({64, 1})->Unit(benchmark::kMillisecond);

void BM_Warp(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Image im(n, n);
    for (double& v : im.data()) v = u(rng);
    FlowField f(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) f.dx(y, x) = u(rng), f.dy(y, x) = u(rng);
    for (auto _ : state) {
        Image w = warp(im, f);
        benchmark::DoNotOptimize(w.data().data());
    }
}
BENCHMARK(BM_Warp)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
