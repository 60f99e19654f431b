#include "mvpf/latent.hpp"

namespace mvpf {

Video Video::from_images(const std::vector<Image>& frames) {
    if (frames.empty()) throw ContractError("video from zero frames");
    Video v(static_cast<int>(frames.size()), frames[0].height, frames[0].width, 3);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!frames[f].same_size(frames[0])) throw DimensionError("video frame sizes differ");
        for (int y = 0; y < v.height; ++y) {
            for (int x = 0; x < v.width; ++x) {
                const double* p = frames[f].px(x, y);
                for (int c = 0; c < 3; ++c) v.at(static_cast<int>(f), y, x, c) = p[c];
            }
        }
    }
    return v;
}

std::vector<Image> Video::to_images() const {
    if (channels != 3) throw ContractError("to_images needs 3 channels");
    std::vector<Image> out(frames, Image(width, height));
    for (int f = 0; f < frames; ++f) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                double* p = out[f].px(x, y);
                for (int c = 0; c < 3; ++c) p[c] = at(f, y, x, c);
            }
        }
    }
    return out;
}

LatentShape latent_shape(std::size_t f, std::size_t H, std::size_t W) {
    if (f == 0 || (f - 1) % kTemporalStride != 0) {
        throw ConfigError("frame count " + std::to_string(f) + " must be 1 + 4k");
    }
    if (H == 0 || W == 0 || H % kSpatialStride != 0 || W % kSpatialStride != 0) {
        throw ConfigError("resolution " + std::to_string(H) + "x" + std::to_string(W) +
                          " must be divisible by " + std::to_string(kSpatialStride));
    }
    return {1 + (f - 1) / kTemporalStride, H / kSpatialStride, W / kSpatialStride};
}

std::size_t latent_channels(std::size_t video_channels) {
    return static_cast<std::size_t>(kTemporalStride) * kSpatialStride * kSpatialStride *
           video_channels;
}

namespace {
// Channel layout inside one latent cell: ((dt * 8 + dy) * 8 + dx) * c + ch.
inline std::size_t cell_channel(int dt, int dy, int dx, int ch, int c) {
    return ((static_cast<std::size_t>(dt) * kSpatialStride + dy) * kSpatialStride + dx) * c + ch;
}

// Input frame feeding latent frame lf, temporal slot dt. Latent frame 0
// replicates input frame 0 across all slots.
inline int source_frame(std::size_t lf, int dt) {
    return lf == 0 ? 0 : static_cast<int>(1 + (lf - 1) * kTemporalStride + dt);
}
}  // namespace

Latent toy_encode(const Video& video) {
    const LatentShape ls = latent_shape(video.frames, video.height, video.width);
    const std::size_t C = latent_channels(video.channels);
    std::vector<double> data(ls.frames * ls.height * ls.width * C);
    std::size_t cell = 0;
    for (std::size_t lf = 0; lf < ls.frames; ++lf) {
        for (std::size_t gy = 0; gy < ls.height; ++gy) {
            for (std::size_t gx = 0; gx < ls.width; ++gx, ++cell) {
                double* dst = &data[cell * C];
                for (int dt = 0; dt < kTemporalStride; ++dt) {
                    const int sf = source_frame(lf, dt);
                    for (int dy = 0; dy < kSpatialStride; ++dy) {
                        for (int dx = 0; dx < kSpatialStride; ++dx) {
                            for (int ch = 0; ch < video.channels; ++ch) {
                                dst[cell_channel(dt, dy, dx, ch, video.channels)] =
                                    video.at(sf, static_cast<int>(gy) * kSpatialStride + dy,
                                             static_cast<int>(gx) * kSpatialStride + dx, ch);
                            }
                        }
                    }
                }
            }
        }
    }
    Latent out;
    out.frames = ls.frames;
    out.height = ls.height;
    out.width = ls.width;
    out.channels = C;
    out.data = Tensor::constant({ls.frames, ls.height, ls.width, C}, std::move(data));
    return out;
}

Video toy_decode(const Latent& latent) {
    if (latent.channels % latent_channels(1) != 0) {
        throw ConfigError("latent channels " + std::to_string(latent.channels) +
                          " not a multiple of " + std::to_string(latent_channels(1)));
    }
    const int c = static_cast<int>(latent.channels / latent_channels(1));
    const int f = 1 + static_cast<int>(latent.frames - 1) * kTemporalStride;
    Video video(f, static_cast<int>(latent.height) * kSpatialStride,
                static_cast<int>(latent.width) * kSpatialStride, c);
    const auto& data = latent.data.values();
    std::size_t cell = 0;
    for (std::size_t lf = 0; lf < latent.frames; ++lf) {
        for (std::size_t gy = 0; gy < latent.height; ++gy) {
            for (std::size_t gx = 0; gx < latent.width; ++gx, ++cell) {
                const double* src = &data[cell * latent.channels];
                const int slots = lf == 0 ? 1 : kTemporalStride;  // slot 0 only for frame 0
                for (int dt = 0; dt < slots; ++dt) {
                    const int sf = source_frame(lf, dt);
                    for (int dy = 0; dy < kSpatialStride; ++dy) {
                        for (int dx = 0; dx < kSpatialStride; ++dx) {
                            for (int ch = 0; ch < c; ++ch) {
                                video.at(sf, static_cast<int>(gy) * kSpatialStride + dy,
                                         static_cast<int>(gx) * kSpatialStride + dx, ch) =
                                    src[cell_channel(dt, dy, dx, ch, c)];
                            }
                        }
                    }
                }
            }
        }
    }
    return video;
}

Latent concat_latent_channels(const Latent& a, const Latent& b) {
    if (a.frames != b.frames || a.height != b.height || a.width != b.width) {
        throw DimensionError("latent grids differ");
    }
    Latent out;
    out.frames = a.frames;
    out.height = a.height;
    out.width = a.width;
    out.channels = a.channels + b.channels;
    out.data = concat_last({a.data, b.data});
    return out;
}

Latent assemble_conditions(const Video& partial, const Video& normal) {
    if (partial.frames != normal.frames || partial.height != normal.height ||
        partial.width != normal.width || partial.channels != normal.channels) {
        throw DimensionError("partial/normal condition videos differ");
    }
    return concat_latent_channels(toy_encode(partial), toy_encode(normal));
}

Latent latent_like(const Latent& ref, Tensor data) {
    if (data.shape() != ref.data.shape()) throw DimensionError("latent_like shape");
    Latent out = ref;
    out.data = std::move(data);
    return out;
}

Latent randn_latent(std::size_t f, std::size_t h, std::size_t w, std::size_t c, Rng& rng) {
    Latent out;
    out.frames = f;
    out.height = h;
    out.width = w;
    out.channels = c;
    out.data = Tensor::randn({f, h, w, c}, rng);
    return out;
}

}  // namespace mvpf
