// mvpf: scene generation, warping, depth refinement, training, sampling and
// evaluation behind one binary. Every run is deterministic given the same
// config, seed and thread count.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvpf/checkpoint.hpp"
#include "mvpf/dataset.hpp"
#include "mvpf/degrade.hpp"
#include "mvpf/denoiser.hpp"
#include "mvpf/depth_refine.hpp"
#include "mvpf/image_io.hpp"
#include "mvpf/metrics.hpp"
#include "mvpf/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvpf;

namespace {

// Missing required values are usage errors (exit 2), even when a config file
// could have supplied them.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

void require_set(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

std::string zero_pad(int v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, v);
    return buf;
}

// Every option that may come from a JSON config file. Flags given on the
// command line win because CLI11 overwrites these after the config is
// applied.
struct CliVars {
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = MVPF_THREADS env or hardware
    int splat_radius = 1;
    std::vector<double> bg_color{0.0, 0.0, 0.0};

    std::string preset = "performer";
    std::string out;
    std::string scene;
    std::string cameras;
    int frames = 5;
    int views = 2;
    double radius = 3.0;   // ring radius, scene units
    double height = 0.0;   // ring height, scene units
    double focal = 300.0;  // pixels
    int size = 64;         // square image side, pixels

    std::string rgb, depth;
    int src = 0, dst = 1;

    std::string relative, metric, normals, camera;
    int camera_index = 0;
    double lambda = 0.1;
    int iters = 200;

    std::string dataset, stage = "both", init;
    int steps = 50;  // sampler K for generate; optimizer steps for train
    int batch = 4;
    double lr_start = 1e-4, lr_end = 2e-5;
    int dim = 32, model_depth = 2, heads = 4, patch = 1;
    int log_every = 0;

    std::string ckpt, sample, generated, thresholds;
    bool no_sync = false;
    double peak = 1.0;
};

const std::vector<std::string> kConfigKeys = {
    "seed",      "threads",   "splat-radius", "bg-color", "preset",   "out",
    "scene",     "cameras",   "frames",       "views",    "radius",   "height",
    "focal",     "size",      "rgb",          "depth",    "src",      "dst",
    "relative",  "metric",    "normals",      "camera",   "camera-index",
    "lambda",    "iters",     "dataset",      "stage",    "init",     "steps",
    "batch",     "lr-start",  "lr-end",       "dim",      "model-depth",
    "heads",     "patch",     "log-every",    "ckpt",     "sample",   "generated",
    "thresholds", "no-sync",  "peak"};

void apply_config(CliVars& v, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    json j = json::parse(is, nullptr, true, true);
    for (const auto& [key, val] : j.items()) {
        if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
            throw ConfigError("unknown config key: " + key);
        }
        if (key == "seed") v.seed = val;
        else if (key == "threads") v.threads = val;
        else if (key == "splat-radius") v.splat_radius = val;
        else if (key == "bg-color") v.bg_color = val.get<std::vector<double>>();
        else if (key == "preset") v.preset = val;
        else if (key == "out") v.out = val;
        else if (key == "scene") v.scene = val;
        else if (key == "cameras") v.cameras = val;
        else if (key == "frames") v.frames = val;
        else if (key == "views") v.views = val;
        else if (key == "radius") v.radius = val;
        else if (key == "height") v.height = val;
        else if (key == "focal") v.focal = val;
        else if (key == "size") v.size = val;
        else if (key == "rgb") v.rgb = val;
        else if (key == "depth") v.depth = val;
        else if (key == "src") v.src = val;
        else if (key == "dst") v.dst = val;
        else if (key == "relative") v.relative = val;
        else if (key == "metric") v.metric = val;
        else if (key == "normals") v.normals = val;
        else if (key == "camera") v.camera = val;
        else if (key == "camera-index") v.camera_index = val;
        else if (key == "lambda") v.lambda = val;
        else if (key == "iters") v.iters = val;
        else if (key == "dataset") v.dataset = val;
        else if (key == "stage") v.stage = val;
        else if (key == "init") v.init = val;
        else if (key == "steps") v.steps = val;
        else if (key == "batch") v.batch = val;
        else if (key == "lr-start") v.lr_start = val;
        else if (key == "lr-end") v.lr_end = val;
        else if (key == "dim") v.dim = val;
        else if (key == "model-depth") v.model_depth = val;
        else if (key == "heads") v.heads = val;
        else if (key == "patch") v.patch = val;
        else if (key == "log-every") v.log_every = val;
        else if (key == "ckpt") v.ckpt = val;
        else if (key == "sample") v.sample = val;
        else if (key == "generated") v.generated = val;
        else if (key == "thresholds") v.thresholds = val;
        else if (key == "no-sync") v.no_sync = val;
        else if (key == "peak") v.peak = val;
    }
}

SplatConfig splat_config(const CliVars& v) {
    SplatConfig c;
    c.radius = v.splat_radius;
    if (v.bg_color.size() != 3) throw ConfigError("bg-color needs 3 components");
    c.background = {v.bg_color[0], v.bg_color[1], v.bg_color[2]};
    return c;
}

Camera camera_at(const std::vector<Camera>& cams, int index, const char* what) {
    if (index < 0 || index >= static_cast<int>(cams.size())) {
        throw ConfigError(std::string(what) + " camera index " + std::to_string(index) +
                          " out of range (rig has " + std::to_string(cams.size()) + ")");
    }
    return cams[index];
}

// ---- subcommand bodies ------------------------------------------------------

int run_make_scene(const CliVars& v) {
    require_set(v.out, "--out");
    Rng rng(v.seed);
    const SceneDescription scene = make_preset(v.preset, rng);
    scene.save(v.out);
    std::cout << "wrote " << v.out << " (" << scene.primitives.size() << " primitives)\n";
    return 0;
}

int run_render_gt(const CliVars& v) {
    require_set(v.scene, "--scene");
    require_set(v.out, "--out");
    const SceneDescription scene = SceneDescription::load(v.scene);
    std::vector<Camera> cams;
    if (!v.cameras.empty()) {
        cams = load_cameras(v.cameras);
    } else {
        RigSpec rig;
        rig.views = v.views;
        rig.radius = v.radius;
        rig.height = v.height;
        rig.focal = v.focal;
        rig.image_width = v.size;
        rig.image_height = v.size;
        cams = make_rig(rig);
    }
    fs::create_directories(v.out);
    save_cameras((fs::path(v.out) / "cameras.json").string(), cams);
    for (std::size_t c = 0; c < cams.size(); ++c) {
        const fs::path dir = fs::path(v.out) / ("cam_" + std::to_string(c));
        fs::create_directories(dir);
        for (int f = 0; f < v.frames; ++f) {
            const RaycastResult rc = raycast(scene, cams[c], f);
            write_png((dir / ("frame_" + zero_pad(f, 3) + ".png")).string(), rc.rgb);
            write_pfm((dir / ("depth_" + zero_pad(f, 3) + ".pfm")).string(), rc.depth);
            write_normals_pfm((dir / ("normal_" + zero_pad(f, 3) + ".pfm")).string(), rc.normals);
        }
    }
    std::cout << "rendered " << cams.size() << " cameras x " << v.frames << " frames to " << v.out
              << "\n";
    return 0;
}

int run_warp(const CliVars& v) {
    require_set(v.rgb, "--rgb");
    require_set(v.depth, "--depth");
    require_set(v.cameras, "--cameras");
    require_set(v.out, "--out");
    const Image rgb = read_png(v.rgb);
    const DepthMap depth = read_pfm(v.depth);
    const std::vector<Camera> cams = load_cameras(v.cameras);
    const Camera src = camera_at(cams, v.src, "src");
    const Camera dst = camera_at(cams, v.dst, "dst");
    const WarpResult wr = warp(rgb, depth, src, dst, splat_config(v));
    fs::create_directories(v.out);
    const fs::path out(v.out);
    write_png((out / "partial.png").string(), wr.partial.rgb);
    write_png((out / "normal.png").string(), wr.normal.rgb);
    write_mask_png((out / "mask.png").string(), wr.partial.mask, dst.width, dst.height);
    DepthMap z(dst.width, dst.height);
    for (int y = 0; y < dst.height; ++y) {
        for (int x = 0; x < dst.width; ++x) {
            if (wr.partial.covered(x, y)) z.set(x, y, wr.partial.zbuffer[y * dst.width + x]);
        }
    }
    write_pfm((out / "zbuffer.pfm").string(), z);
    std::cout << "warped view " << v.src << " -> " << v.dst << " into " << v.out << "\n";
    return 0;
}

int run_refine_depth(const CliVars& v) {
    require_set(v.relative, "--relative");
    require_set(v.metric, "--metric");
    require_set(v.normals, "--normals");
    require_set(v.camera, "--camera");
    require_set(v.out, "--out");
    const DepthMap relative = read_pfm(v.relative);
    const DepthMap metric = read_pfm(v.metric);
    const NormalMap normals = read_normals_pfm(v.normals);
    const std::vector<Camera> cams = load_cameras(v.camera);
    const Camera cam = camera_at(cams, v.camera_index, "camera");
    RefineParams params;
    params.lambda = v.lambda;
    params.iters = v.iters;
    const RefineResult res = refine_pipeline(relative, metric, normals, cam, params);
    write_pfm(v.out, res.refined);
    std::cout << "alpha " << res.fit.alpha << " beta " << res.fit.beta << " residual_rms "
              << res.fit.residual_rms << "\nwrote " << v.out << "\n";
    return 0;
}

int run_train(const CliVars& v) {
    require_set(v.dataset, "--dataset");
    require_set(v.out, "--out");
    DenoiserConfig mc;
    mc.depth = v.model_depth;
    mc.dim = v.dim;
    mc.heads = v.heads;
    mc.patch = v.patch;
    mc.init_seed = v.seed;
    MultiViewDenoiser model(mc);
    if (!v.init.empty()) load_checkpoint(v.init, model.params());
    const std::vector<TrainSample> data = load_dataset_latents(v.dataset);
    TrainConfig tc;
    tc.steps = v.steps;
    tc.batch = v.batch;
    tc.lr_start = v.lr_start;
    tc.lr_end = v.lr_end;
    tc.seed = v.seed;
    tc.log_every = v.log_every;
    auto report = [](int stage, const StageStats& st) {
        std::cout << "stage " << stage << ": loss " << st.initial_loss << " -> " << st.final_loss
                  << "\n";
    };
    if (v.stage == "1") {
        report(1, train_stage(model, data, tc, 1));
    } else if (v.stage == "2") {
        report(2, train_stage(model, data, tc, 2));
    } else if (v.stage == "both") {
        const auto [s1, s2] = train_two_stage(model, data, tc);
        report(1, s1);
        report(2, s2);
    } else {
        throw ConfigError("stage must be 1, 2 or both");
    }
    save_checkpoint(v.out, model.params());
    mc.save(v.out + ".json");
    std::cout << "wrote " << v.out << " and " << v.out << ".json\n";
    return 0;
}

int run_generate(const CliVars& v) {
    require_set(v.ckpt, "--ckpt");
    require_set(v.sample, "--sample");
    require_set(v.out, "--out");
    const DenoiserConfig mc = DenoiserConfig::load(v.ckpt + ".json");
    MultiViewDenoiser model(mc);
    load_checkpoint(v.ckpt, model.params());
    const DatasetSample s = load_sample(v.sample);
    if (v.views < 1 || v.views > static_cast<int>(s.cameras.size()) - 1) {
        throw ConfigError("views must be in [1, " + std::to_string(s.cameras.size() - 1) +
                          "] for this sample");
    }
    GenerateOptions opts;
    opts.steps = v.steps;
    opts.seed = v.seed;
    opts.splat = splat_config(v);
    opts.enable_sync = !v.no_sync;
    const std::vector<Camera> targets(s.cameras.begin() + 1, s.cameras.begin() + 1 + v.views);
    const std::vector<Video> videos =
        generate_multiview(model, s.ref, s.ref_depth, s.cameras[0], targets, opts);
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const fs::path dir = fs::path(v.out) / ("view_" + std::to_string(i + 1));
        fs::create_directories(dir);
        const std::vector<Image> frames = videos[i].to_images();
        for (std::size_t f = 0; f < frames.size(); ++f) {
            write_png((dir / ("frame_" + zero_pad(static_cast<int>(f), 3) + ".png")).string(),
                      frames[f]);
        }
    }
    std::cout << "generated " << videos.size() << " view directories in " << v.out << "\n";
    return 0;
}

int run_eval(const CliVars& v) {
    require_set(v.generated, "--generated");
    require_set(v.sample, "--sample");
    require_set(v.out, "--out");
    const DatasetSample gt = load_sample(v.sample);
    // generated layout: <dir>/view_%d/frame_%03d.png
    std::vector<Video> gen;
    for (int i = 1;; ++i) {
        const fs::path dir = fs::path(v.generated) / ("view_" + std::to_string(i));
        if (!fs::is_directory(dir)) break;
        std::vector<Image> frames;
        for (int f = 0;; ++f) {
            const fs::path p = dir / ("frame_" + zero_pad(f, 3) + ".png");
            if (!fs::exists(p)) break;
            frames.push_back(read_png(p.string()));
        }
        if (frames.empty()) throw IoError("no frames in " + dir.string());
        gen.push_back(Video::from_images(frames));
    }
    if (gen.empty()) throw IoError("no view_* directories in " + v.generated);
    if (gen.size() > gt.views.size()) throw ConfigError("more generated views than GT views");

    EvalReport report;
    double psnr_acc = 0.0, ssim_acc = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const std::vector<Image> a = gen[i].to_images();
        const std::vector<Image> b = gt.views[i].to_images();
        if (a.size() != b.size()) throw DimensionError("frame counts generated vs GT");
        double p_acc = 0.0, s_acc = 0.0;
        for (std::size_t f = 0; f < a.size(); ++f) {
            p_acc += psnr(a[f], b[f], v.peak);
            SsimParams sp;
            sp.peak = v.peak;
            s_acc += ssim(a[f], b[f], sp);
        }
        ViewScore vs;
        vs.psnr = p_acc / a.size();
        vs.ssim = s_acc / a.size();
        report.per_view.push_back(vs);
        psnr_acc += vs.psnr;
        ssim_acc += vs.ssim;
    }
    report.mean_psnr = psnr_acc / gen.size();
    report.mean_ssim = ssim_acc / gen.size();
    std::vector<std::vector<DepthMap>> depths(gt.view_depth.begin(),
                                              gt.view_depth.begin() + gen.size());
    std::vector<Camera> cams(gt.cameras.begin() + 1, gt.cameras.begin() + 1 + gen.size());
    report.consistency = cross_view_consistency(gen, depths, cams);
    if (!v.depth.empty() && !v.metric.empty()) {
        report.depth_rmse = depth_rmse(read_pfm(v.depth), read_pfm(v.metric));
    }
    std::ofstream os(v.out);
    if (!os) throw IoError("cannot open for write: " + v.out);
    os << report.to_json() << "\n";
    std::cout << report.to_json() << "\n";

    if (!v.thresholds.empty()) {
        std::ifstream ts(v.thresholds);
        if (!ts) throw ConfigError("cannot open thresholds: " + v.thresholds);
        json t = json::parse(ts);
        bool ok = true;
        auto fail = [&](const std::string& what) {
            std::cerr << "threshold failed: " << what << "\n";
            ok = false;
        };
        for (const auto& [key, val] : t.items()) {
            if (key == "min_psnr") {
                if (!(report.mean_psnr >= val.get<double>())) fail("min_psnr");
            } else if (key == "min_ssim") {
                if (!(report.mean_ssim >= val.get<double>())) fail("min_ssim");
            } else if (key == "max_consistency") {
                if (!report.consistency.defined ||
                    !(report.consistency.score <= val.get<double>())) {
                    fail("max_consistency");
                }
            } else {
                throw ConfigError("unknown threshold key: " + key);
            }
        }
        if (!ok) return 1;
    }
    return 0;
}

#define SELF_CHECK(name, cond)                                     \
    do {                                                           \
        if (cond) {                                                \
            std::cout << "ok " << name << "\n";                    \
        } else {                                                   \
            std::cout << "FAIL " << name << "\n";                  \
            failures += 1;                                         \
        }                                                          \
    } while (0)

int run_selftest() {
    int failures = 0;
    {  // attention of a single token is the value itself
        Tensor q = Tensor::constant({1, 1}, {1.0});
        SELF_CHECK("attention singleton", attention(q, q, q, 1).value() == 1.0);
    }
    {  // two identical keys average the values
        Tensor q = Tensor::constant({1, 1}, {0.3});
        Tensor k = Tensor::constant({2, 1}, {0.7, 0.7});
        Tensor vv = Tensor::constant({2, 1}, {0.0, 2.0});
        SELF_CHECK("attention equal keys", std::abs(attention(q, k, vv, 1).value() - 1.0) < 1e-12);
    }
    {  // d(x*x)/dx = 2x
        Tensor x = Tensor::leaf({1}, {3.0}, true);
        mul(x, x).backward();
        SELF_CHECK("backward x*x", x.grad()[0] == 6.0);
    }
    {  // constant row collapses to zero under layer norm
        Tensor x = Tensor::constant({1, 3}, {1.0, 1.0, 1.0});
        Tensor g = Tensor::constant({3}, {1.0, 1.0, 1.0});
        Tensor b = Tensor::constant({3}, {0.0, 0.0, 0.0});
        Tensor y = layer_norm(x, g, b, 1e-5);
        SELF_CHECK("layer_norm constant row",
                   y.at(0) == 0.0 && y.at(1) == 0.0 && y.at(2) == 0.0);
    }
    {
        const LatentShape ls = latent_shape(49, 480, 480);
        SELF_CHECK("latent shape law", ls.frames == 13 && ls.height == 60 && ls.width == 60);
    }
    {
        Rng rng(5);
        Video v(5, 16, 16, 3);
        for (double& x : v.data) x = rng.uniform();
        const Video back = toy_decode(toy_encode(v));
        SELF_CHECK("toy codec round trip", back.data == v.data);
    }
    {
        Tensor a = Tensor::constant({3}, {1.0, 2.0, 3.0});
        Tensor b = Tensor::constant({3}, {4.0, 5.0, 6.0});
        SELF_CHECK("interpolate endpoints", interpolate(a, b, 0.0).values() == a.values() &&
                                                interpolate(a, b, 1.0).values() == b.values());
    }
    {  // v = 0 keeps the state at x0 for any K
        auto zero_v = [](const Tensor& x, const Tensor&, double) {
            return Tensor::zeros(x.shape());
        };
        Tensor x0 = Tensor::constant({4}, {1.0, -2.0, 0.5, 3.0});
        SELF_CHECK("euler zero field",
                   sample_euler(zero_v, x0, Tensor(), 7).values() == x0.values());
    }
    {
        DepthMap rel(3, 1), met(3, 1);
        for (int i = 0; i < 3; ++i) {
            rel.set(i, 0, static_cast<double>(i));
            met.set(i, 0, 1.0 + 2.0 * i);
        }
        const AffineFit fit = align_affine(rel, met);
        SELF_CHECK("align exact affine", std::abs(fit.alpha - 2.0) < 1e-12 &&
                                             std::abs(fit.beta - 1.0) < 1e-12 &&
                                             fit.residual_rms < 1e-12);
    }
    {
        Camera cam = make_simple_camera(1.0, 2, 2, Mat3::identity(), {0, 0, 0});
        cam.K(0, 2) = 0.0;
        cam.K(1, 2) = 0.0;
        const auto o1 = view_dot({0, 0, -1}, {0, 0, 5}, cam);
        const auto o2 = view_dot({0, 0, 1}, {0, 0, 5}, cam);
        SELF_CHECK("view_dot signs", o1 && *o1 == 1.0 && o2 && *o2 == -1.0);
    }
    {
        Camera cam = make_simple_camera(1.0, 2, 2, Mat3::identity(), {0, 0, 0});
        cam.K(0, 2) = 0.0;
        cam.K(1, 2) = 0.0;
        const auto p = project(cam, {0.0, 0.0, 5.0});
        SELF_CHECK("project identity", p && p->u == 0.0 && p->v == 0.0 && p->depth == 5.0);
        const Vec3 x = unproject_pixel(cam, 2.0, 3.0, 4.0);
        SELF_CHECK("unproject pixel", x.x == 8.0 && x.y == 12.0 && x.z == 4.0);
    }
    {
        Image a(16, 16, 0.25), b(16, 16, 0.25);
        SELF_CHECK("psnr identical infinite", std::isinf(psnr(a, b, 1.0)));
        SELF_CHECK("ssim identical", std::abs(ssim(a, b) - 1.0) < 1e-12);
    }
    {  // fresh model output identical with ref/sync ablated
        DenoiserConfig mc;
        mc.dim = 8;
        mc.depth = 1;
        mc.heads = 2;
        mc.video_channels = 1;
        MultiViewDenoiser model(mc);
        Rng rng(3);
        const std::size_t C = mc.latent_dim();
        std::vector<Tensor> zn = {Tensor::randn({1, 2, 2, C}, rng)};
        std::vector<Tensor> zc = {Tensor::randn({1, 2, 2, 2 * C}, rng)};
        Tensor zr = Tensor::randn({1, 2, 2, C}, rng);
        MultiViewBatch b = MultiViewBatch::make(zn, zc, zr);
        const auto full = model.forward(b, 0.5, true, true);
        const auto ablated = model.forward(b, 0.5, false, false);
        SELF_CHECK("zero-init identity", full[0].values() == ablated[0].values());
    }
    {  // checkpoint round trip is byte-exact
        ParamStore store;
        Rng rng(11);
        store.create("a.w", {2, 3}, init_values(Init::kXavierUniform, 2, 3, 6, rng));
        store.create("b.bias", {4}, {0.25, -0.5, 1.0 / 3.0, 2.0});
        const std::string p1 = (fs::temp_directory_path() / "mvpf_selftest_1.mvpf").string();
        const std::string p2 = (fs::temp_directory_path() / "mvpf_selftest_2.mvpf").string();
        save_checkpoint(p1, store);
        load_checkpoint(p1, store);
        save_checkpoint(p2, store);
        std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
        std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        SELF_CHECK("checkpoint round trip", !s1.empty() && s1 == s2);
        fs::remove(p1);
        fs::remove(p2);
    }
    std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-view video pipeline: warping conditions, depth refinement, "
                 "flow-matching denoiser, synthetic oracle scenes"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    CliVars v;
    std::string config_path;
    // Config file first, flags win.
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
        if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    }
    try {
        if (!config_path.empty()) apply_config(v, config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    app.add_option("--config", config_path, "JSON config file; explicit flags override it");
    app.add_option("--threads", v.threads,
                   "worker cap for parallel sections (0 = MVPF_THREADS env or hardware)");

    CLI::App* sc_scene = app.add_subcommand("make-scene", "write a procedural scene JSON");
    sc_scene->add_option("--preset", v.preset, "sphere | blob | performer");
    sc_scene->add_option("--seed", v.seed, "palette/motion seed");
    sc_scene->add_option("--out", v.out, "output scene JSON path");

    CLI::App* sc_render = app.add_subcommand("render-gt", "ray-cast ground-truth RGB/depth/normals");
    sc_render->add_option("--scene", v.scene, "scene JSON");
    sc_render->add_option("--cameras", v.cameras, "camera rig JSON (else built from ring flags)");
    sc_render->add_option("--views", v.views, "ring camera count");
    sc_render->add_option("--radius", v.radius, "ring radius (scene units)");
    sc_render->add_option("--height", v.height, "ring height (scene units)");
    sc_render->add_option("--focal", v.focal, "focal length (pixels)");
    sc_render->add_option("--size", v.size, "square image side (pixels)");
    sc_render->add_option("--frames", v.frames, "frame count");
    sc_render->add_option("--out", v.out, "output directory");

    CLI::App* sc_warp = app.add_subcommand("warp", "depth-based warp of one RGBD frame");
    sc_warp->add_option("--rgb", v.rgb, "source RGB PNG");
    sc_warp->add_option("--depth", v.depth, "source depth PFM");
    sc_warp->add_option("--cameras", v.cameras, "camera rig JSON");
    sc_warp->add_option("--src", v.src, "source camera index in the rig");
    sc_warp->add_option("--dst", v.dst, "destination camera index in the rig");
    sc_warp->add_option("--splat-radius", v.splat_radius,
                        "splat half-width (pixels); 1 = single pixel");
    sc_warp->add_option("--bg-color", v.bg_color, "background RGB in [0,1]")->expected(3);
    sc_warp->add_option("--out", v.out, "output directory");

    CLI::App* sc_refine = app.add_subcommand("refine-depth",
                                             "affine-align relative depth, then normal-guided "
                                             "optimization");
    sc_refine->add_option("--relative", v.relative, "relative depth PFM");
    sc_refine->add_option("--metric", v.metric, "coarse metric depth PFM");
    sc_refine->add_option("--normals", v.normals, "target normals PFM (raw vectors)");
    sc_refine->add_option("--camera", v.camera, "camera rig JSON");
    sc_refine->add_option("--camera-index", v.camera_index, "camera index in the rig");
    sc_refine->add_option("--lambda", v.lambda, "anchor weight (> 0)");
    sc_refine->add_option("--iters", v.iters, "gradient descent iterations");
    sc_refine->add_option("--out", v.out, "refined depth PFM path");

    CLI::App* sc_emit = app.add_subcommand("emit-dataset", "write a synthetic training dataset");
    int emit_samples = 1;
    sc_emit->add_option("--samples", emit_samples, "sample count");
    sc_emit->add_option("--views", v.views, "target view count m");
    sc_emit->add_option("--frames", v.frames, "frames per video (1 + 4k)");
    sc_emit->add_option("--preset", v.preset, "scene preset");
    sc_emit->add_option("--seed", v.seed, "dataset seed");
    sc_emit->add_option("--size", v.size, "square image side (pixels, multiple of 8)");
    sc_emit->add_option("--radius", v.radius, "ring radius (scene units)");
    sc_emit->add_option("--height", v.height, "ring height (scene units)");
    sc_emit->add_option("--focal", v.focal, "focal length (pixels)");
    sc_emit->add_option("--splat-radius", v.splat_radius, "condition splat half-width (pixels)");
    sc_emit->add_option("--out", v.out, "output dataset directory");

    CLI::App* sc_train = app.add_subcommand("train", "two-stage denoiser training");
    sc_train->add_option("--dataset", v.dataset, "dataset directory");
    sc_train->add_option("--stage", v.stage, "1 | 2 | both");
    sc_train->add_option("--steps", v.steps, "optimizer steps per stage");
    sc_train->add_option("--batch", v.batch, "batch size (samples per step)");
    sc_train->add_option("--lr-start", v.lr_start, "initial learning rate");
    sc_train->add_option("--lr-end", v.lr_end, "final learning rate");
    sc_train->add_option("--seed", v.seed, "training seed");
    sc_train->add_option("--dim", v.dim, "hidden size");
    sc_train->add_option("--model-depth", v.model_depth, "transformer blocks");
    sc_train->add_option("--heads", v.heads, "attention heads");
    sc_train->add_option("--patch", v.patch, "latent patch size");
    sc_train->add_option("--init", v.init, "checkpoint to start from");
    sc_train->add_option("--log-every", v.log_every, "log cadence (0 = silent)");
    sc_train->add_option("--out", v.out, "checkpoint output path (.mvpf)");

    CLI::App* sc_gen = app.add_subcommand("generate", "sample novel views for a dataset sample");
    sc_gen->add_option("--ckpt", v.ckpt, "checkpoint path (.mvpf, with .json sidecar)");
    sc_gen->add_option("--sample", v.sample, "dataset sample directory");
    sc_gen->add_option("--views", v.views, "target view count");
    sc_gen->add_option("--steps", v.steps, "Euler sampling steps K");
    sc_gen->add_option("--seed", v.seed, "noise seed");
    sc_gen->add_option("--splat-radius", v.splat_radius, "condition splat half-width (pixels)");
    sc_gen->add_flag("--no-sync", v.no_sync, "ablate synchronization attention");
    sc_gen->add_option("--out", v.out, "output directory");

    CLI::App* sc_eval = app.add_subcommand("eval", "PSNR/SSIM/consistency report");
    sc_eval->add_option("--generated", v.generated, "generated directory (view_i/frame_*.png)");
    sc_eval->add_option("--sample", v.sample, "ground-truth dataset sample directory");
    sc_eval->add_option("--peak", v.peak, "PSNR/SSIM peak (1.0 float images, 255 for 8-bit)");
    sc_eval->add_option("--depth", v.depth, "refined depth PFM for depth_rmse (optional)");
    sc_eval->add_option("--metric", v.metric, "GT depth PFM for depth_rmse (optional)");
    sc_eval->add_option("--thresholds", v.thresholds,
                        "JSON thresholds; nonzero exit when violated");
    sc_eval->add_option("--out", v.out, "report JSON path");

    app.add_subcommand("selftest", "run the built-in example checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
    }
    set_thread_count(v.threads);

    try {
        if (sc_scene->parsed()) return run_make_scene(v);
        if (sc_render->parsed()) return run_render_gt(v);
        if (sc_warp->parsed()) return run_warp(v);
        if (sc_refine->parsed()) return run_refine_depth(v);
        if (sc_emit->parsed()) {
            require_set(v.out, "--out");
            EmitConfig cfg;
            cfg.samples = emit_samples;
            cfg.target_views = v.views;
            cfg.frames = v.frames;
            cfg.scene_preset = v.preset;
            cfg.seed = v.seed;
            cfg.image_size = v.size;
            cfg.ring_radius = v.radius;
            cfg.ring_height = v.height;
            cfg.focal = v.focal;
            cfg.splat = splat_config(v);
            emit_dataset(cfg, v.out);
            std::cout << "wrote " << cfg.samples << " samples to " << v.out << "\n";
            return 0;
        }
        if (sc_train->parsed()) return run_train(v);
        if (sc_gen->parsed()) return run_generate(v);
        if (sc_eval->parsed()) return run_eval(v);
        return run_selftest();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
