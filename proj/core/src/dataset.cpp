#include "mvpf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mvpf/image_io.hpp"

namespace fs = std::filesystem;

namespace mvpf {

namespace {
std::string zero_pad(int v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, v);
    return buf;
}

std::string frame_name(int f) { return "frame_" + zero_pad(f, 3) + ".png"; }
std::string depth_name(int f) { return "depth_" + zero_pad(f, 3) + ".pfm"; }
}  // namespace

Image quantize_image_8bit(const Image& img) {
    Image out = img;
    for (double& v : out.data) v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    return out;
}

DepthMap quantize_depth_f32(const DepthMap& depth) {
    DepthMap out = depth;
    for (double& v : out.values) v = static_cast<double>(static_cast<float>(v));
    return out;
}

void emit_dataset(const EmitConfig& config, const std::string& out_dir) {
    if (config.samples < 1) throw ContractError("emit_dataset needs samples >= 1");
    if (config.target_views < 1) throw ContractError("emit_dataset needs views >= 1");
    latent_shape(config.frames, config.image_size, config.image_size);  // validates

    RigSpec rig;
    rig.views = config.target_views + 1;  // reference plus targets
    rig.radius = config.ring_radius;
    rig.height = config.ring_height;
    rig.focal = config.focal;
    rig.image_width = config.image_size;
    rig.image_height = config.image_size;
    const std::vector<Camera> cameras = make_rig(rig);

    Rng master(config.seed);
    for (int s = 0; s < config.samples; ++s) {
        Rng rng = master.fork(static_cast<std::uint64_t>(s));
        const SceneDescription scene = make_preset(config.scene_preset, rng);
        const fs::path sample_dir = fs::path(out_dir) / ("sample_" + zero_pad(s, 3));
        fs::create_directories(sample_dir / "ref");
        save_cameras((sample_dir / "cameras.json").string(), cameras);

        // Reference RGBD, stored and then used in quantized form so the
        // conditions can be re-derived from the files bit-exactly.
        std::vector<Image> ref_rgb(config.frames);
        std::vector<DepthMap> ref_depth(config.frames);
        for (int f = 0; f < config.frames; ++f) {
            RaycastResult rc = raycast(scene, cameras[0], f);
            ref_rgb[f] = quantize_image_8bit(rc.rgb);
            ref_depth[f] = quantize_depth_f32(rc.depth);
            write_png((sample_dir / "ref" / frame_name(f)).string(), ref_rgb[f]);
            write_pfm((sample_dir / "ref" / depth_name(f)).string(), ref_depth[f]);
        }

        for (int v = 1; v <= config.target_views; ++v) {
            const fs::path vdir = sample_dir / ("view_" + std::to_string(v));
            fs::create_directories(vdir / "partial");
            fs::create_directories(vdir / "normal");
            for (int f = 0; f < config.frames; ++f) {
                RaycastResult rc = raycast(scene, cameras[v], f);
                write_png((vdir / frame_name(f)).string(), rc.rgb);
                write_pfm((vdir / depth_name(f)).string(), rc.depth);
                const WarpResult wr =
                    warp(ref_rgb[f], ref_depth[f], cameras[0], cameras[v], config.splat);
                write_png((vdir / "partial" / frame_name(f)).string(), wr.partial.rgb);
                write_png((vdir / "normal" / frame_name(f)).string(), wr.normal.rgb);
            }
        }
    }
}

std::vector<std::string> list_sample_dirs(const std::string& dataset_dir) {
    std::vector<std::string> dirs;
    if (!fs::is_directory(dataset_dir)) throw IoError("not a directory: " + dataset_dir);
    for (const auto& e : fs::directory_iterator(dataset_dir)) {
        if (e.is_directory() && e.path().filename().string().rfind("sample_", 0) == 0) {
            dirs.push_back(e.path().string());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw IoError("no sample_* directories in " + dataset_dir);
    return dirs;
}

namespace {
int count_frames(const fs::path& dir) {
    int n = 0;
    while (fs::exists(dir / frame_name(n))) ++n;
    if (n == 0) throw IoError("no frames in " + dir.string());
    return n;
}

Video load_frames(const fs::path& dir, int frames) {
    std::vector<Image> imgs;
    imgs.reserve(frames);
    for (int f = 0; f < frames; ++f) imgs.push_back(read_png((dir / frame_name(f)).string()));
    return Video::from_images(imgs);
}

std::vector<DepthMap> load_depths(const fs::path& dir, int frames) {
    std::vector<DepthMap> out;
    out.reserve(frames);
    for (int f = 0; f < frames; ++f) out.push_back(read_pfm((dir / depth_name(f)).string()));
    return out;
}
}  // namespace

DatasetSample load_sample(const std::string& sample_dir) {
    const fs::path dir(sample_dir);
    DatasetSample s;
    s.cameras = load_cameras((dir / "cameras.json").string());
    const int frames = count_frames(dir / "ref");
    s.ref = load_frames(dir / "ref", frames);
    s.ref_depth = load_depths(dir / "ref", frames);
    for (int v = 1;; ++v) {
        const fs::path vdir = dir / ("view_" + std::to_string(v));
        if (!fs::is_directory(vdir)) break;
        s.views.push_back(load_frames(vdir, frames));
        s.view_depth.push_back(load_depths(vdir, frames));
        s.partials.push_back(load_frames(vdir / "partial", frames));
        s.normals.push_back(load_frames(vdir / "normal", frames));
    }
    if (s.views.empty()) throw IoError("no view_* directories in " + sample_dir);
    if (s.cameras.size() != s.views.size() + 1) {
        throw IoError("cameras.json count vs view directories in " + sample_dir);
    }
    return s;
}

TrainSample sample_to_latents(const DatasetSample& sample) {
    TrainSample t;
    t.ref = toy_encode(sample.ref);
    for (std::size_t v = 0; v < sample.views.size(); ++v) {
        t.targets.push_back(toy_encode(sample.views[v]));
        t.conds.push_back(assemble_conditions(sample.partials[v], sample.normals[v]));
    }
    return t;
}

std::vector<TrainSample> load_dataset_latents(const std::string& dataset_dir) {
    std::vector<TrainSample> out;
    for (const std::string& dir : list_sample_dirs(dataset_dir)) {
        out.push_back(sample_to_latents(load_sample(dir)));
    }
    return out;
}

}  // namespace mvpf
