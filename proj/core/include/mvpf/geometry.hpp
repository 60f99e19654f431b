#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mvpf/errors.hpp"

namespace mvpf {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);

// Row-major 3x3.
struct Mat3 {
    double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2);
    // Rotation by angle (radians) about a unit axis.
    static Mat3 axis_angle(const Vec3& axis, double angle);

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }
};

Vec3 operator*(const Mat3& a, const Vec3& v);
Mat3 operator*(const Mat3& a, const Mat3& b);
Mat3 transposed(const Mat3& a);
Mat3 inverse(const Mat3& a);
double det(const Mat3& a);

// Rigid world transform x -> R x + t.
struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    static RigidTransform identity() { return {Mat3::identity(), {0, 0, 0}}; }
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_dir(const Vec3& d) const { return rotation * d; }
    RigidTransform inverse() const;
    RigidTransform compose(const RigidTransform& inner) const;  // this ∘ inner
};

// Pinhole camera, world->camera extrinsics: x_cam = R x_world + t. K is
// upper-triangular with positive focals. Continuous pixel coordinates; the
// center of pixel (row i, col j) is (j + 0.5, i + 0.5).
struct Camera {
    Mat3 K;
    Mat3 R;
    Vec3 t;
    int width = 0;
    int height = 0;

    Vec3 center() const;  // C = -R^T t
    // Unit vector from a world point toward the camera center.
    Vec3 dir_to_camera(const Vec3& p) const { return normalized(center() - p); }
    void validate() const;  // throws ContractError on a non-rigid R or bad K
};

Camera make_simple_camera(double focal, int width, int height, const Mat3& R, const Vec3& t);

struct PixelProjection {
    double u = 0.0, v = 0.0;  // continuous pixel coordinates
    double depth = 0.0;       // camera-frame z
};

// Perspective projection. Returns nullopt when the point is at or behind the
// camera plane (depth <= 0): such points are culled, not an error.
std::optional<PixelProjection> project(const Camera& camera, const Vec3& point);

// Inverse of project for a continuous pixel coordinate:
// X = R^T (depth * K^{-1} [u, v, 1]^T - t).
Vec3 unproject_pixel(const Camera& camera, double u, double v, double depth);

// Metric depth image, camera-z convention. Row-major, row 0 = top.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    DepthMap() = default;
    DepthMap(int w, int h) : width(w), height(h), values(w * h, 0.0), valid(w * h, 0) {}

    double at(int x, int y) const { return values[y * width + x]; }
    double& at(int x, int y) { return values[y * width + x]; }
    bool is_valid(int x, int y) const { return valid[y * width + x] != 0; }
    void set(int x, int y, double d) {
        values[y * width + x] = d;
        valid[y * width + x] = 1;
    }
    std::size_t valid_count() const;
};

// H x W x 3 image in [0, 1], row-major, row 0 = top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // 3 channels interleaved

    Image() = default;
    Image(int w, int h, double fill = 0.0) : width(w), height(h), data(3 * w * h, fill) {}

    double* px(int x, int y) { return &data[3 * (y * width + x)]; }
    const double* px(int x, int y) const { return &data[3 * (y * width + x)]; }
    bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

// World-frame normal map aligned with a DepthMap.
struct NormalMap {
    int width = 0;
    int height = 0;
    std::vector<Vec3> normals;
    std::vector<std::uint8_t> valid;

    NormalMap() = default;
    NormalMap(int w, int h) : width(w), height(h), normals(w * h), valid(w * h, 0) {}

    const Vec3& at(int x, int y) const { return normals[y * width + x]; }
    bool is_valid(int x, int y) const { return valid[y * width + x] != 0; }
    void set(int x, int y, const Vec3& n) {
        normals[y * width + x] = n;
        valid[y * width + x] = 1;
    }
};

struct OrientedPointCloud {
    std::vector<Vec3> positions;  // world frame
    std::vector<Vec3> colors;     // [0, 1]
    std::vector<Vec3> normals;    // unit, world frame
    std::vector<std::uint32_t> source_pixel;  // y * width + x in the source view

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
};

// One point per valid depth pixel, colors copied from rgb, normals estimated
// from the depth map and oriented toward the source camera. Pixels whose
// normal cannot be estimated (isolated neighborhoods) fall back to the view
// direction so the unit-normal invariant holds for every emitted point.
OrientedPointCloud unproject_depth(const Camera& camera, const DepthMap& depth, const Image& rgb);

// Normals from cross products of central differences of unprojected
// positions (forward/backward at borders and mask edges), oriented so
// n . (C - X) > 0. Pixels without a valid horizontal and vertical neighbor
// pair are marked invalid.
NormalMap normals_from_depth(const Camera& camera, const DepthMap& depth);

}  // namespace mvpf
