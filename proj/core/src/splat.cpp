#include "mvpf/splat.hpp"

#include <algorithm>
#include <cmath>

namespace mvpf {

std::optional<double> view_dot(const Vec3& normal, const Vec3& point, const Camera& camera) {
    if (std::abs(norm(normal) - 1.0) > 1e-6) throw ContractError("view_dot needs a unit normal");
    const Vec3 to_cam = camera.center() - point;
    const double len = norm(to_cam);
    if (len < 1e-12) return std::nullopt;
    double o = dot(normal, to_cam) * (1.0 / len);
    return std::clamp(o, -1.0, 1.0);
}

SplatBuffer splat_points(const OrientedPointCloud& cloud, const Camera& camera,
                         const SplatConfig& config) {
    camera.validate();
    if (config.radius < 1) throw ContractError("splat radius must be >= 1");
    SplatBuffer buf(camera.width, camera.height);
    const int half = config.radius - 1;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto proj = project(camera, cloud.positions[i]);
        if (!proj) continue;  // behind the camera: culled
        const int cx = static_cast<int>(std::floor(proj->u));
        const int cy = static_cast<int>(std::floor(proj->v));
        for (int dy = -half; dy <= half; ++dy) {
            const int y = cy + dy;
            if (y < 0 || y >= buf.height) continue;
            for (int dx = -half; dx <= half; ++dx) {
                const int x = cx + dx;
                if (x < 0 || x >= buf.width) continue;
                const std::size_t at = static_cast<std::size_t>(y) * buf.width + x;
                // Strict test keeps the lowest index on equal depth because
                // points arrive in index order.
                if (proj->depth < buf.z[at]) {
                    buf.z[at] = proj->depth;
                    buf.point_index[at] = static_cast<std::int64_t>(i);
                }
            }
        }
    }
    return buf;
}

namespace {
PartialRender color_partial(const OrientedPointCloud& cloud, const SplatBuffer& buf,
                            const SplatConfig& config) {
    PartialRender out;
    out.rgb = Image(buf.width, buf.height);
    out.mask.assign(static_cast<std::size_t>(buf.width) * buf.height, 0);
    out.zbuffer = buf.z;
    for (int y = 0; y < buf.height; ++y) {
        for (int x = 0; x < buf.width; ++x) {
            const std::size_t at = static_cast<std::size_t>(y) * buf.width + x;
            double* px = out.rgb.px(x, y);
            if (buf.point_index[at] < 0) {
                px[0] = config.background.x;
                px[1] = config.background.y;
                px[2] = config.background.z;
                continue;
            }
            const Vec3& c = cloud.colors[static_cast<std::size_t>(buf.point_index[at])];
            px[0] = c.x;
            px[1] = c.y;
            px[2] = c.z;
            out.mask[at] = 1;
        }
    }
    return out;
}

CameraNormalMap color_normal(const OrientedPointCloud& cloud, const Camera& camera,
                             const SplatBuffer& buf, const SplatConfig& config) {
    CameraNormalMap out;
    out.rgb = Image(buf.width, buf.height);
    out.mask.assign(static_cast<std::size_t>(buf.width) * buf.height, 0);
    out.zbuffer = buf.z;
    out.orientation.assign(static_cast<std::size_t>(buf.width) * buf.height, 0.0);
    for (int y = 0; y < buf.height; ++y) {
        for (int x = 0; x < buf.width; ++x) {
            const std::size_t at = static_cast<std::size_t>(y) * buf.width + x;
            double* px = out.rgb.px(x, y);
            if (buf.point_index[at] < 0) {
                px[0] = config.background.x;
                px[1] = config.background.y;
                px[2] = config.background.z;
                continue;
            }
            const std::size_t i = static_cast<std::size_t>(buf.point_index[at]);
            out.mask[at] = 1;
            const auto o = view_dot(cloud.normals[i], cloud.positions[i], camera);
            const double ov = o.value_or(-1.0);
            out.orientation[at] = ov;
            if (ov >= 0.0) {
                const Vec3& n = cloud.normals[i];
                px[0] = 0.5 * (n.x + 1.0);
                px[1] = 0.5 * (n.y + 1.0);
                px[2] = 0.5 * (n.z + 1.0);
            }
            // back-facing: left exactly (0,0,0)
        }
    }
    return out;
}
}  // namespace

PartialRender render_partial(const OrientedPointCloud& cloud, const Camera& camera,
                             const SplatConfig& config) {
    return color_partial(cloud, splat_points(cloud, camera, config), config);
}

CameraNormalMap render_camera_normal(const OrientedPointCloud& cloud, const Camera& camera,
                                     const SplatConfig& config) {
    for (const Vec3& n : cloud.normals) {
        if (std::abs(norm(n) - 1.0) > 1e-6) throw ContractError("cloud normals must be unit");
    }
    return color_normal(cloud, camera, splat_points(cloud, camera, config), config);
}

WarpResult warp(const Image& rgb, const DepthMap& depth, const Camera& src, const Camera& dst,
                const SplatConfig& config) {
    const OrientedPointCloud cloud = unproject_depth(src, depth, rgb);
    const SplatBuffer buf = splat_points(cloud, dst, config);
    return {color_partial(cloud, buf, config), color_normal(cloud, dst, buf, config)};
}

}  // namespace mvpf
