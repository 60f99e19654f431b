#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mvpf/geometry.hpp"

namespace mvpf {

struct SplatConfig {
    // Footprint half-width in pixels, Chebyshev distance < radius around the
    // landing pixel: 1 = single pixel, 2 = 3x3 block.
    int radius = 1;
    Vec3 background{0.0, 0.0, 0.0};
};

// Target-view splat of a colored point cloud. Invalid pixels hold exactly
// the background color and an infinite z.
struct PartialRender {
    Image rgb;
    std::vector<std::uint8_t> mask;
    std::vector<double> zbuffer;

    bool covered(int x, int y) const { return mask[y * rgb.width + x] != 0; }
};

// Normal render with the view-orientation convention: covered pixels whose
// winning point faces the camera (o >= 0) encode (n+1)/2, back-facing ones
// are exactly black. Shares z-buffer semantics with PartialRender.
struct CameraNormalMap {
    Image rgb;
    std::vector<std::uint8_t> mask;
    std::vector<double> zbuffer;
    std::vector<double> orientation;  // o = n . d for covered pixels, 0 elsewhere

    bool covered(int x, int y) const { return mask[y * rgb.width + x] != 0; }
};

// o = n . d with d the unit vector from the surface point toward the camera
// center; o > 0 means camera-facing. nullopt when the point coincides with
// the camera center. Throws if the normal is not unit length (1e-6).
std::optional<double> view_dot(const Vec3& normal, const Vec3& point, const Camera& camera);

// Winning point index per pixel after z-buffered square splatting.
// Ties: smaller depth wins, then smaller point index. Index -1 = empty.
struct SplatBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::int64_t> point_index;
    std::vector<double> z;

    SplatBuffer() = default;
    SplatBuffer(int w, int h)
        : width(w),
          height(h),
          point_index(static_cast<std::size_t>(w) * h, -1),
          z(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity()) {}
};

SplatBuffer splat_points(const OrientedPointCloud& cloud, const Camera& camera,
                         const SplatConfig& config = {});

PartialRender render_partial(const OrientedPointCloud& cloud, const Camera& camera,
                             const SplatConfig& config = {});
CameraNormalMap render_camera_normal(const OrientedPointCloud& cloud, const Camera& camera,
                                     const SplatConfig& config = {});

struct WarpResult {
    PartialRender partial;
    CameraNormalMap normal;
};

// Depth-based warping: unproject the source RGBD frame to an oriented point
// cloud and splat it under the destination camera. Both renders come from
// one splat pass, so their masks and z-buffers are identical.
WarpResult warp(const Image& rgb, const DepthMap& depth, const Camera& src, const Camera& dst,
                const SplatConfig& config = {});

}  // namespace mvpf
