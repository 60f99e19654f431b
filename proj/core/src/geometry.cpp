#include "mvpf/geometry.hpp"

#include <cmath>

namespace mvpf {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    if (n == 0.0) throw ContractError("normalizing zero vector");
    return a * (1.0 / n);
}

Mat3 Mat3::from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
    Mat3 r;
    r.m[0] = r0.x;
    r.m[1] = r0.y;
    r.m[2] = r0.z;
    r.m[3] = r1.x;
    r.m[4] = r1.y;
    r.m[5] = r1.z;
    r.m[6] = r2.x;
    r.m[7] = r2.y;
    r.m[8] = r2.z;
    return r;
}

Mat3 Mat3::axis_angle(const Vec3& axis, double angle) {
    const Vec3 u = normalized(axis);
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 r;
    r.m[0] = c + u.x * u.x * t;
    r.m[1] = u.x * u.y * t - u.z * s;
    r.m[2] = u.x * u.z * t + u.y * s;
    r.m[3] = u.y * u.x * t + u.z * s;
    r.m[4] = c + u.y * u.y * t;
    r.m[5] = u.y * u.z * t - u.x * s;
    r.m[6] = u.z * u.x * t - u.y * s;
    r.m[7] = u.z * u.y * t + u.x * s;
    r.m[8] = c + u.z * u.z * t;
    return r;
}

Vec3 operator*(const Mat3& a, const Vec3& v) {
    return {a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z,
            a.m[3] * v.x + a.m[4] * v.y + a.m[5] * v.z,
            a.m[6] * v.x + a.m[7] * v.y + a.m[8] * v.z};
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a.m[i * 3 + k] * b.m[k * 3 + j];
            r.m[i * 3 + j] = s;
        }
    }
    return r;
}

Mat3 transposed(const Mat3& a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r.m[i * 3 + j] = a.m[j * 3 + i];
    }
    return r;
}

double det(const Mat3& a) {
    return a.m[0] * (a.m[4] * a.m[8] - a.m[5] * a.m[7]) -
           a.m[1] * (a.m[3] * a.m[8] - a.m[5] * a.m[6]) +
           a.m[2] * (a.m[3] * a.m[7] - a.m[4] * a.m[6]);
}

Mat3 inverse(const Mat3& a) {
    const double d = det(a);
    if (std::abs(d) < 1e-300) throw ContractError("singular 3x3 matrix");
    const double inv = 1.0 / d;
    Mat3 r;
    r.m[0] = (a.m[4] * a.m[8] - a.m[5] * a.m[7]) * inv;
    r.m[1] = (a.m[2] * a.m[7] - a.m[1] * a.m[8]) * inv;
    r.m[2] = (a.m[1] * a.m[5] - a.m[2] * a.m[4]) * inv;
    r.m[3] = (a.m[5] * a.m[6] - a.m[3] * a.m[8]) * inv;
    r.m[4] = (a.m[0] * a.m[8] - a.m[2] * a.m[6]) * inv;
    r.m[5] = (a.m[2] * a.m[3] - a.m[0] * a.m[5]) * inv;
    r.m[6] = (a.m[3] * a.m[7] - a.m[4] * a.m[6]) * inv;
    r.m[7] = (a.m[1] * a.m[6] - a.m[0] * a.m[7]) * inv;
    r.m[8] = (a.m[0] * a.m[4] - a.m[1] * a.m[3]) * inv;
    return r;
}

RigidTransform RigidTransform::inverse() const {
    const Mat3 rt = transposed(rotation);
    return {rt, -(rt * translation)};
}

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
    return {rotation * inner.rotation, rotation * inner.translation + translation};
}

Vec3 Camera::center() const { return -(transposed(R) * t); }

void Camera::validate() const {
    if (width <= 0 || height <= 0) throw ContractError("camera with non-positive image size");
    // R^T R = I and det +1 within 1e-9.
    const Mat3 rtr = transposed(R) * R;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(rtr.m[i * 3 + j] - want) > 1e-9) {
                throw ContractError("camera rotation not orthonormal");
            }
        }
    }
    if (std::abs(det(R) - 1.0) > 1e-9) throw ContractError("camera rotation determinant != +1");
    if (K(0, 0) <= 0.0 || K(1, 1) <= 0.0 || K(2, 2) != 1.0 || K(1, 0) != 0.0 || K(2, 0) != 0.0 ||
        K(2, 1) != 0.0) {
        throw ContractError("intrinsics not upper-triangular with positive focals");
    }
    const Vec3 c = center();
    if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(c.z)) {
        throw ContractError("camera center not finite");
    }
}

Camera make_simple_camera(double focal, int width, int height, const Mat3& R, const Vec3& t) {
    Camera cam;
    cam.K = Mat3::identity();
    cam.K(0, 0) = focal;
    cam.K(1, 1) = focal;
    cam.K(0, 2) = 0.5 * width;
    cam.K(1, 2) = 0.5 * height;
    cam.R = R;
    cam.t = t;
    cam.width = width;
    cam.height = height;
    return cam;
}

std::optional<PixelProjection> project(const Camera& camera, const Vec3& point) {
    const Vec3 pc = camera.R * point + camera.t;
    if (pc.z <= 0.0 || !std::isfinite(pc.z)) return std::nullopt;
    const Vec3 h = camera.K * pc;
    return PixelProjection{h.x / h.z, h.y / h.z, pc.z};
}

Vec3 unproject_pixel(const Camera& camera, double u, double v, double depth) {
    const Vec3 ray = inverse(camera.K) * Vec3{u, v, 1.0};
    return transposed(camera.R) * (ray * depth - camera.t);
}

std::size_t DepthMap::valid_count() const {
    std::size_t n = 0;
    for (std::uint8_t v : valid) n += v != 0;
    return n;
}

namespace {
// Position differences along x/y for the normal cross product. Central
// differences where both neighbors are valid, one-sided otherwise, nullopt
// when no valid neighbor pair exists.
std::optional<Vec3> axis_difference(const Camera& cam, const DepthMap& d, int x, int y, int dx,
                                    int dy) {
    auto pos = [&](int px, int py) {
        return unproject_pixel(cam, px + 0.5, py + 0.5, d.at(px, py));
    };
    const int xm = x - dx, ym = y - dy;
    const int xp = x + dx, yp = y + dy;
    const bool has_m = xm >= 0 && ym >= 0 && xm < d.width && ym < d.height && d.is_valid(xm, ym);
    const bool has_p = xp >= 0 && yp >= 0 && xp < d.width && yp < d.height && d.is_valid(xp, yp);
    if (has_m && has_p) return pos(xp, yp) - pos(xm, ym);
    if (has_p) return pos(xp, yp) - pos(x, y);
    if (has_m) return pos(x, y) - pos(xm, ym);
    return std::nullopt;
}
}  // namespace

NormalMap normals_from_depth(const Camera& camera, const DepthMap& depth) {
    NormalMap out(depth.width, depth.height);
    const Vec3 cam_center = camera.center();
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            if (!depth.is_valid(x, y)) continue;
            const auto tx = axis_difference(camera, depth, x, y, 1, 0);
            const auto ty = axis_difference(camera, depth, x, y, 0, 1);
            if (!tx || !ty) continue;  // isolated pixel: left invalid
            const Vec3 c = cross(*tx, *ty);
            const double len = norm(c);
            if (len < 1e-30) continue;
            Vec3 n = c * (1.0 / len);
            const Vec3 p = unproject_pixel(camera, x + 0.5, y + 0.5, depth.at(x, y));
            if (dot(n, cam_center - p) < 0.0) n = -n;
            out.set(x, y, n);
        }
    }
    return out;
}

OrientedPointCloud unproject_depth(const Camera& camera, const DepthMap& depth,
                                   const Image& rgb) {
    if (rgb.width != depth.width || rgb.height != depth.height) {
        throw DimensionError("rgb " + std::to_string(rgb.width) + "x" +
                             std::to_string(rgb.height) + " vs depth " +
                             std::to_string(depth.width) + "x" + std::to_string(depth.height));
    }
    const NormalMap nm = normals_from_depth(camera, depth);
    OrientedPointCloud cloud;
    const std::size_t n = depth.valid_count();
    cloud.positions.reserve(n);
    cloud.colors.reserve(n);
    cloud.normals.reserve(n);
    cloud.source_pixel.reserve(n);
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            if (!depth.is_valid(x, y)) continue;
            const Vec3 p = unproject_pixel(camera, x + 0.5, y + 0.5, depth.at(x, y));
            cloud.positions.push_back(p);
            const double* c = rgb.px(x, y);
            cloud.colors.push_back({c[0], c[1], c[2]});
            cloud.normals.push_back(nm.is_valid(x, y) ? nm.at(x, y) : camera.dir_to_camera(p));
            cloud.source_pixel.push_back(static_cast<std::uint32_t>(y * depth.width + x));
        }
    }
    return cloud;
}

}  // namespace mvpf
