#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvpf/geometry.hpp"
#include "mvpf/rng.hpp"

namespace mvpf {

enum class PrimitiveKind { kSphere, kBox, kCapsule, kCylinder };
enum class TextureKind { kSolid, kChecker, kStripes, kSmooth };

// Procedural surface color in the primitive's local frame. Surfaces whose
// local normal has z <= 0 count as "front" and use the front palette; the
// back palette is distinct so that made-up back content is detectable.
struct Texture {
    TextureKind kind = TextureKind::kSolid;
    double scale = 0.25;
    Vec3 front_a{0.85, 0.35, 0.25};
    Vec3 front_b{0.95, 0.85, 0.30};
    Vec3 back_a{0.25, 0.35, 0.85};
    Vec3 back_b{0.25, 0.80, 0.80};
};

// Rigid per-frame motion: rotate by spin_rate * frame about spin_axis
// through pivot, then translate by velocity * frame.
struct PrimitiveAnimation {
    Vec3 spin_axis{0.0, 1.0, 0.0};
    double spin_rate = 0.0;  // radians per frame
    Vec3 pivot{0.0, 0.0, 0.0};
    Vec3 velocity{0.0, 0.0, 0.0};
};

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::kSphere;
    Vec3 center{0.0, 0.0, 0.0};
    Mat3 orientation;            // local -> world at frame 0
    double radius = 1.0;         // sphere, capsule, cylinder
    double half_length = 0.5;    // capsule/cylinder half axis length (local y)
    Vec3 half_extents{0.5, 0.5, 0.5};  // box
    Texture texture;
    PrimitiveAnimation animation;

    RigidTransform world_from_local(int frame) const;
};

struct SceneDescription {
    std::vector<Primitive> primitives;

    std::string to_json() const;
    static SceneDescription from_json(const std::string& text);
    void save(const std::string& path) const;
    static SceneDescription load(const std::string& path);
};

// Canned scenes. The performer proxy is a capsule/sphere assembly with one
// waving arm; palettes are drawn from rng so back-texture content varies
// per sample.
SceneDescription preset_sphere();
SceneDescription preset_blob();  // sphere + capsule, gentle smooth textures
SceneDescription preset_performer(Rng& rng);
SceneDescription make_preset(const std::string& name, Rng& rng);

struct RaycastResult {
    Image rgb;
    DepthMap depth;      // camera-z of the nearest hit
    NormalMap normals;   // analytic, world frame, outward
};

// Analytic ground truth: nearest hit per pixel ray (pixel centers at +0.5),
// background pixels left invalid.
RaycastResult raycast(const SceneDescription& scene, const Camera& camera, int frame);

// Single-ray query used by oracle tests: camera-z depth of the nearest hit
// along the ray through continuous pixel (u, v).
std::optional<double> raycast_depth_at(const SceneDescription& scene, const Camera& camera,
                                       int frame, double u, double v);

// Unsigned distance from a world point to the nearest primitive surface,
// exact for every primitive kind. The floater oracle: a splatted point is
// off-surface when this exceeds a fraction of its depth.
double surface_distance(const SceneDescription& scene, int frame, const Vec3& point);

}  // namespace mvpf
