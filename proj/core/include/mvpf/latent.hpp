#pragma once

#include <vector>

#include "mvpf/geometry.hpp"
#include "mvpf/tensor.hpp"

namespace mvpf {

// Plain [f, H, W, c] video buffer, values in [0, 1] for RGB content.
struct Video {
    int frames = 0;
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    Video() = default;
    Video(int f, int h, int w, int c)
        : frames(f),
          height(h),
          width(w),
          channels(c),
          data(static_cast<std::size_t>(f) * h * w * c, 0.0) {}

    double& at(int f, int y, int x, int c) {
        return data[((static_cast<std::size_t>(f) * height + y) * width + x) * channels + c];
    }
    double at(int f, int y, int x, int c) const {
        return data[((static_cast<std::size_t>(f) * height + y) * width + x) * channels + c];
    }

    static Video from_images(const std::vector<Image>& frames);
    std::vector<Image> to_images() const;  // channels must be 3
};

// Video compression strides: one latent frame per kTemporalStride input
// frames (first frame carried separately) and one latent cell per
// kSpatialStride^2 pixel block.
constexpr int kTemporalStride = 4;
constexpr int kSpatialStride = 8;

struct LatentShape {
    std::size_t frames = 0, height = 0, width = 0;
    bool operator==(const LatentShape&) const = default;
};

// (f, H, W) -> (1 + (f-1)/4, H/8, W/8). The first frame gets its own latent
// frame; each later latent frame covers 4 input frames. Throws ConfigError
// when (f-1) % 4 != 0 or H, W % 8 != 0.
LatentShape latent_shape(std::size_t f, std::size_t H, std::size_t W);

// Latent grid [f', h, w, C] with C = 4 * 8 * 8 * c. Carried as a rank-4
// tensor so it can enter the denoiser graph directly.
struct Latent {
    std::size_t frames = 0, height = 0, width = 0, channels = 0;
    Tensor data;
};

std::size_t latent_channels(std::size_t video_channels);

// Fixed, untrained, exactly invertible rearrangement standing in for a
// learned video VAE. Each latent cell packs a (4 frames x 8 x 8 x c) block
// into channels; the first latent frame holds frame 0 replicated across the
// four temporal slots so the channel count is uniform. toy_decode reads the
// first temporal slot back, so decode(encode(v)) == v bit-exactly.
Latent toy_encode(const Video& video);
Video toy_decode(const Latent& latent);

// Channel-concatenation of two latents: [f', h, w, Ca + Cb].
Latent concat_latent_channels(const Latent& a, const Latent& b);

// Per-view condition latents: encode the partial render video and the
// normal-map video separately, then concatenate along channels -> 2C.
Latent assemble_conditions(const Video& partial, const Video& normal);

Latent latent_like(const Latent& ref, Tensor data);
Latent randn_latent(std::size_t f, std::size_t h, std::size_t w, std::size_t c, Rng& rng);

}  // namespace mvpf
