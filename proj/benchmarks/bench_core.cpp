#include <benchmark/benchmark.h>

#include "mvpf/denoiser.hpp"
#include "mvpf/depth_refine.hpp"
#include "mvpf/metrics.hpp"
#include "mvpf/nn.hpp"
#include "mvpf/rig.hpp"
#include "mvpf/scene.hpp"
#include "mvpf/splat.hpp"

using namespace mvpf;

namespace {

void BM_MatmulBackward(benchmark::State& state) {
    const std::size_t n = state.range(0);
    Rng rng(1);
    Tensor a = Tensor::leaf({n, n}, Tensor::randn({n, n}, rng).values(), true);
    Tensor b = Tensor::leaf({n, n}, Tensor::randn({n, n}, rng).values(), true);
    for (auto _ : state) {
        a.zero_grad();
        b.zero_grad();
        Tensor loss = mean(matmul(a, b));
        loss.backward();
        benchmark::DoNotOptimize(a.grad().data());
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_Attention(benchmark::State& state) {
    const std::size_t tokens = state.range(0);
    Rng rng(2);
    Tensor q = Tensor::randn({tokens, 64}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(attention(q, q, q, 8).values().data());
    }
}
BENCHMARK(BM_Attention)->Arg(16)->Arg(64)->Arg(256);

void BM_Raycast(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Rng rng(3);
    const SceneDescription scene = preset_performer(rng);
    const Camera cam = look_at_camera({0.0, 0.0, -3.0}, {0.0, 0.0, 0.0}, size * 1.0, size, size);
    for (auto _ : state) {
        benchmark::DoNotOptimize(raycast(scene, cam, 0).depth.values.data());
    }
}
BENCHMARK(BM_Raycast)->Arg(64)->Arg(128)->Arg(256);

void BM_Warp(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const SceneDescription scene = preset_sphere();
    const Camera src = look_at_camera({0.0, 0.0, -3.0}, {0.0, 0.0, 0.0}, size * 1.0, size, size);
    const Camera dst = look_at_camera({3.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, size * 1.0, size, size);
    const RaycastResult rc = raycast(scene, src, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(warp(rc.rgb, rc.depth, src, dst).partial.rgb.data.data());
    }
}
BENCHMARK(BM_Warp)->Arg(128)->Arg(256);

void BM_AlignAffine(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Rng rng(4);
    DepthMap rel(size, size), met(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double r = rng.uniform(0.5, 5.0);
            rel.set(x, y, r);
            met.set(x, y, 2.0 * r + 1.0 + 0.01 * rng.normal());
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(align_affine(rel, met).alpha);
    }
}
BENCHMARK(BM_AlignAffine)->Arg(128)->Arg(512);

void BM_Ssim(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Rng rng(5);
    Image a(size, size), b(size, size);
    for (double& v : a.data) v = rng.uniform();
    for (double& v : b.data) v = rng.uniform();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim(a, b));
    }
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_DenoiserForward(benchmark::State& state) {
    DenoiserConfig cfg;
    cfg.dim = 48;
    cfg.depth = 2;
    cfg.heads = 4;
    cfg.video_channels = 3;
    MultiViewDenoiser model(cfg);
    Rng rng(6);
    const std::size_t C = cfg.latent_dim();
    std::vector<Tensor> zn, zc;
    for (int i = 0; i < 2; ++i) {
        zn.push_back(Tensor::randn({2, 2, 2, C}, rng));
        zc.push_back(Tensor::randn({2, 2, 2, 2 * C}, rng));
    }
    const MultiViewBatch batch = MultiViewBatch::make(zn, zc, Tensor::randn({2, 2, 2, C}, rng));
    GradGuard no_grad(false);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(batch, 0.5)[0].values().data());
    }
}
BENCHMARK(BM_DenoiserForward);

}  // namespace

BENCHMARK_MAIN();
