#pragma once

#include <string>
#include <vector>

#include "mvpf/denoiser.hpp"
#include "mvpf/rig.hpp"
#include "mvpf/scene.hpp"

namespace mvpf {

// Dataset layout, one directory per sample:
//   sample_%03d/cameras.json          reference camera first, then targets
//   sample_%03d/ref/frame_%03d.png    reference frames (+ depth_%03d.pfm)
//   sample_%03d/view_%d/frame_%03d.png  target views, 1-based (+ depth pfm)
//   sample_%03d/view_%d/partial/frame_%03d.png
//   sample_%03d/view_%d/normal/frame_%03d.png
// Conditions are derived from the stored (quantized) reference RGBD, so
// re-running warp on the files reproduces them exactly.

struct EmitConfig {
    int samples = 1;
    int frames = 5;  // 1 + 4k
    int target_views = 2;
    std::string scene_preset = "performer";
    std::uint64_t seed = 0;
    double ring_radius = 3.0;
    double ring_height = 0.0;
    double focal = 300.0;
    int image_size = 64;  // must be divisible by the spatial stride
    SplatConfig splat;
};

void emit_dataset(const EmitConfig& config, const std::string& out_dir);

struct DatasetSample {
    Video ref;
    std::vector<DepthMap> ref_depth;
    std::vector<Video> views;
    std::vector<std::vector<DepthMap>> view_depth;
    std::vector<Video> partials;
    std::vector<Video> normals;
    std::vector<Camera> cameras;  // [0] = reference
};

std::vector<std::string> list_sample_dirs(const std::string& dataset_dir);
DatasetSample load_sample(const std::string& sample_dir);
TrainSample sample_to_latents(const DatasetSample& sample);
std::vector<TrainSample> load_dataset_latents(const std::string& dataset_dir);

// 8-bit and float32 round-trips, matching what PNG/PFM storage does.
Image quantize_image_8bit(const Image& img);
DepthMap quantize_depth_f32(const DepthMap& depth);

}  // namespace mvpf
