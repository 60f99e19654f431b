#include "mvpf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>

#include "json.hpp"
#include "mvpf/parallel.hpp"

namespace mvpf {

using nlohmann::json;

RigidTransform Primitive::world_from_local(int frame) const {
    const RigidTransform base{orientation, center};
    if (animation.spin_rate == 0.0 && animation.velocity.x == 0.0 &&
        animation.velocity.y == 0.0 && animation.velocity.z == 0.0) {
        return base;
    }
    const double k = static_cast<double>(frame);
    const Mat3 rk = Mat3::axis_angle(animation.spin_axis, animation.spin_rate * k);
    const RigidTransform motion{
        rk, animation.pivot - rk * animation.pivot + animation.velocity * k};
    return motion.compose(base);
}

namespace {

struct LocalHit {
    double t = 0.0;
    Vec3 point;   // local frame
    Vec3 normal;  // local frame, outward, unit
};

constexpr double kRayEps = 1e-9;

std::optional<LocalHit> hit_sphere(const Vec3& o, const Vec3& d, double r) {
    const double a = dot(d, d);
    const double b = 2.0 * dot(o, d);
    const double c = dot(o, o) - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    double t = (-b - sq) / (2.0 * a);
    if (t < kRayEps) t = (-b + sq) / (2.0 * a);
    if (t < kRayEps) return std::nullopt;
    const Vec3 p = o + d * t;
    return LocalHit{t, p, p * (1.0 / r)};
}

std::optional<LocalHit> hit_box(const Vec3& o, const Vec3& d, const Vec3& e) {
    double tmin = -1e300, tmax = 1e300;
    int axis_min = -1;
    double sign_min = 1.0;
    const double ov[3] = {o.x, o.y, o.z}, dv[3] = {d.x, d.y, d.z}, ev[3] = {e.x, e.y, e.z};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dv[a]) < 1e-15) {
            if (std::abs(ov[a]) > ev[a]) return std::nullopt;
            continue;
        }
        double t1 = (-ev[a] - ov[a]) / dv[a];
        double t2 = (ev[a] - ov[a]) / dv[a];
        double s = -1.0;
        if (t1 > t2) {
            std::swap(t1, t2);
            s = 1.0;
        }
        if (t1 > tmin) {
            tmin = t1;
            axis_min = a;
            sign_min = s;
        }
        tmax = std::min(tmax, t2);
    }
    if (tmax < tmin || tmax < kRayEps || tmin < kRayEps || axis_min < 0) return std::nullopt;
    Vec3 n{0, 0, 0};
    if (axis_min == 0) n.x = sign_min;
    if (axis_min == 1) n.y = sign_min;
    if (axis_min == 2) n.z = sign_min;
    return LocalHit{tmin, o + d * tmin, n};
}

// Capsule: segment y in [-h, h] swept by radius r.
std::optional<LocalHit> hit_capsule(const Vec3& o, const Vec3& d, double r, double h) {
    std::optional<LocalHit> best;
    auto consider = [&](const std::optional<LocalHit>& c) {
        if (c && (!best || c->t < best->t)) best = c;
    };
    const double a = d.x * d.x + d.z * d.z;
    if (a > 1e-15) {
        const double b = 2.0 * (o.x * d.x + o.z * d.z);
        const double c = o.x * o.x + o.z * o.z - r * r;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (const double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (t < kRayEps) continue;
                const Vec3 p = o + d * t;
                if (std::abs(p.y) <= h) {
                    consider(LocalHit{t, p, Vec3{p.x, 0.0, p.z} * (1.0 / r)});
                    break;  // nearer root first; the far one is interior
                }
            }
        }
    }
    for (const double cy : {h, -h}) {
        const Vec3 oc{o.x, o.y - cy, o.z};
        if (auto s = hit_sphere(oc, d, r)) {
            // only the hemisphere beyond the segment end belongs to the cap
            if ((cy > 0.0 && s->point.y >= 0.0) || (cy < 0.0 && s->point.y <= 0.0)) {
                consider(LocalHit{s->t, Vec3{s->point.x, s->point.y + cy, s->point.z}, s->normal});
            }
        }
    }
    return best;
}

// Capped cylinder: side x^2 + z^2 = r^2 with |y| <= h plus disk caps.
std::optional<LocalHit> hit_cylinder(const Vec3& o, const Vec3& d, double r, double h) {
    std::optional<LocalHit> best;
    auto consider = [&](const LocalHit& c) {
        if (!best || c.t < best->t) best = c;
    };
    const double a = d.x * d.x + d.z * d.z;
    if (a > 1e-15) {
        const double b = 2.0 * (o.x * d.x + o.z * d.z);
        const double c = o.x * o.x + o.z * o.z - r * r;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (const double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (t < kRayEps) continue;
                const Vec3 p = o + d * t;
                if (std::abs(p.y) <= h) {
                    consider({t, p, Vec3{p.x, 0.0, p.z} * (1.0 / r)});
                    break;
                }
            }
        }
    }
    if (std::abs(d.y) > 1e-15) {
        for (const double cy : {h, -h}) {
            const double t = (cy - o.y) / d.y;
            if (t < kRayEps) continue;
            const Vec3 p = o + d * t;
            if (p.x * p.x + p.z * p.z <= r * r) {
                consider({t, p, Vec3{0.0, cy > 0.0 ? 1.0 : -1.0, 0.0}});
            }
        }
    }
    return best;
}

std::optional<LocalHit> hit_primitive(const Primitive& prim, const Vec3& o, const Vec3& d) {
    switch (prim.kind) {
        case PrimitiveKind::kSphere:
            return hit_sphere(o, d, prim.radius);
        case PrimitiveKind::kBox:
            return hit_box(o, d, prim.half_extents);
        case PrimitiveKind::kCapsule:
            return hit_capsule(o, d, prim.radius, prim.half_length);
        case PrimitiveKind::kCylinder:
            return hit_cylinder(o, d, prim.radius, prim.half_length);
    }
    return std::nullopt;
}

Vec3 mix(const Vec3& a, const Vec3& b, double w) { return a + (b - a) * w; }

Vec3 texture_color(const Texture& tex, const Vec3& p, const Vec3& n_local) {
    const bool front = n_local.z <= 0.0;
    const Vec3& ca = front ? tex.front_a : tex.back_a;
    const Vec3& cb = front ? tex.front_b : tex.back_b;
    const double s = tex.scale;
    switch (tex.kind) {
        case TextureKind::kSolid:
            return ca;
        case TextureKind::kChecker: {
            const long long cells = static_cast<long long>(std::floor(p.x / s)) +
                                    static_cast<long long>(std::floor(p.y / s)) +
                                    static_cast<long long>(std::floor(p.z / s));
            return (cells & 1) ? cb : ca;
        }
        case TextureKind::kStripes: {
            const long long band = static_cast<long long>(std::floor(p.y / s));
            return (band & 1) ? cb : ca;
        }
        case TextureKind::kSmooth: {
            // Lipschitz-gentle gradient: period 8 * scale per axis blend.
            const double w =
                0.5 + 0.5 * std::sin(2.0 * M_PI * (p.x + 0.7 * p.y + 0.4 * p.z) / (8.0 * s));
            return mix(ca, cb, w);
        }
    }
    return ca;
}

struct WorldHit {
    double t = 0.0;
    Vec3 normal;  // world
    Vec3 color;
};

std::optional<WorldHit> trace(const SceneDescription& scene, int frame, const Vec3& origin,
                              const Vec3& dir) {
    std::optional<WorldHit> best;
    for (const Primitive& prim : scene.primitives) {
        const RigidTransform wfl = prim.world_from_local(frame);
        const RigidTransform lfw = wfl.inverse();
        const Vec3 o = lfw.apply(origin);
        const Vec3 d = lfw.apply_dir(dir);
        const auto hit = hit_primitive(prim, o, d);
        if (!hit || (best && hit->t >= best->t)) continue;
        best = WorldHit{hit->t, wfl.apply_dir(hit->normal),
                        texture_color(prim.texture, hit->point, hit->normal)};
    }
    return best;
}

}  // namespace

RaycastResult raycast(const SceneDescription& scene, const Camera& camera, int frame) {
    camera.validate();
    RaycastResult out;
    out.rgb = Image(camera.width, camera.height);
    out.depth = DepthMap(camera.width, camera.height);
    out.normals = NormalMap(camera.width, camera.height);
    const Vec3 origin = camera.center();
    const Mat3 ray_mat = transposed(camera.R) * inverse(camera.K);
    parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t y) {
        for (int x = 0; x < camera.width; ++x) {
            // dir has camera-z 1, so the ray parameter is the metric depth.
            const Vec3 dir = ray_mat * Vec3{x + 0.5, static_cast<double>(y) + 0.5, 1.0};
            const auto hit = trace(scene, frame, origin, dir);
            if (!hit) continue;
            out.depth.set(x, static_cast<int>(y), hit->t);
            out.normals.set(x, static_cast<int>(y), normalized(hit->normal));
            double* px = out.rgb.px(x, static_cast<int>(y));
            px[0] = std::clamp(hit->color.x, 0.0, 1.0);
            px[1] = std::clamp(hit->color.y, 0.0, 1.0);
            px[2] = std::clamp(hit->color.z, 0.0, 1.0);
        }
    });
    return out;
}

std::optional<double> raycast_depth_at(const SceneDescription& scene, const Camera& camera,
                                       int frame, double u, double v) {
    const Vec3 origin = camera.center();
    const Vec3 dir = transposed(camera.R) * (inverse(camera.K) * Vec3{u, v, 1.0});
    const auto hit = trace(scene, frame, origin, dir);
    if (!hit) return std::nullopt;
    return hit->t;
}

namespace {
double primitive_distance(const Primitive& prim, const Vec3& p) {
    switch (prim.kind) {
        case PrimitiveKind::kSphere:
            return std::abs(norm(p) - prim.radius);
        case PrimitiveKind::kBox: {
            const Vec3 q{std::abs(p.x) - prim.half_extents.x, std::abs(p.y) - prim.half_extents.y,
                         std::abs(p.z) - prim.half_extents.z};
            const Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
            const double sdf = norm(outside) + std::min(std::max({q.x, q.y, q.z}), 0.0);
            return std::abs(sdf);
        }
        case PrimitiveKind::kCapsule: {
            const double cy = std::clamp(p.y, -prim.half_length, prim.half_length);
            const Vec3 to_axis{p.x, p.y - cy, p.z};
            return std::abs(norm(to_axis) - prim.radius);
        }
        case PrimitiveKind::kCylinder: {
            const double dr = std::sqrt(p.x * p.x + p.z * p.z) - prim.radius;
            const double dy = std::abs(p.y) - prim.half_length;
            if (dr <= 0.0 && dy <= 0.0) return std::abs(std::max(dr, dy));  // inside
            const double ox = std::max(dr, 0.0), oy = std::max(dy, 0.0);
            return std::sqrt(ox * ox + oy * oy);
        }
    }
    return 0.0;
}
}  // namespace

double surface_distance(const SceneDescription& scene, int frame, const Vec3& point) {
    double best = std::numeric_limits<double>::infinity();
    for (const Primitive& prim : scene.primitives) {
        const Vec3 local = prim.world_from_local(frame).inverse().apply(point);
        best = std::min(best, primitive_distance(prim, local));
    }
    return best;
}

// ---- presets and JSON -------------------------------------------------------

SceneDescription preset_sphere() {
    SceneDescription s;
    Primitive p;
    p.kind = PrimitiveKind::kSphere;
    p.radius = 1.0;
    p.texture.kind = TextureKind::kSmooth;
    s.primitives.push_back(p);
    return s;
}

SceneDescription preset_blob() {
    SceneDescription s;
    Primitive ball;
    ball.kind = PrimitiveKind::kSphere;
    ball.center = {0.0, 0.25, 0.0};
    ball.radius = 0.75;
    ball.texture.kind = TextureKind::kSmooth;
    s.primitives.push_back(ball);
    Primitive limb;
    limb.kind = PrimitiveKind::kCapsule;
    limb.center = {0.0, -0.55, 0.0};
    limb.radius = 0.3;
    limb.half_length = 0.45;
    limb.texture.kind = TextureKind::kSmooth;
    limb.texture.front_a = {0.35, 0.75, 0.45};
    limb.texture.front_b = {0.75, 0.70, 0.35};
    s.primitives.push_back(limb);
    return s;
}

SceneDescription preset_performer(Rng& rng) {
    SceneDescription s;
    auto palette = [&rng]() { return Vec3{rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95),
                                          rng.uniform(0.15, 0.95)}; };
    Primitive torso;
    torso.kind = PrimitiveKind::kCapsule;
    torso.center = {0.0, 0.05, 0.0};
    torso.radius = 0.27;
    torso.half_length = 0.38;
    torso.texture.kind = TextureKind::kChecker;
    torso.texture.scale = 0.18;
    torso.texture.front_a = palette();
    torso.texture.front_b = palette();
    torso.texture.back_a = palette();
    torso.texture.back_b = palette();
    s.primitives.push_back(torso);

    Primitive head;
    head.kind = PrimitiveKind::kSphere;
    head.center = {0.0, 0.78, 0.0};
    head.radius = 0.20;
    head.texture.kind = TextureKind::kSmooth;
    head.texture.front_a = palette();
    head.texture.back_a = palette();
    s.primitives.push_back(head);

    for (const double side : {-1.0, 1.0}) {
        Primitive arm;
        arm.kind = PrimitiveKind::kCapsule;
        arm.center = {side * 0.42, 0.12, 0.0};
        arm.radius = 0.10;
        arm.half_length = 0.30;
        arm.texture.kind = TextureKind::kStripes;
        arm.texture.scale = 0.12;
        arm.texture.front_a = palette();
        arm.texture.front_b = palette();
        arm.texture.back_a = palette();
        arm.texture.back_b = palette();
        if (side > 0.0) {
            // waving arm: swings about the shoulder
            arm.animation.spin_axis = {0.0, 0.0, 1.0};
            arm.animation.spin_rate = 2.0 * M_PI / 48.0;
            arm.animation.pivot = {0.42, 0.42, 0.0};
        }
        s.primitives.push_back(arm);

        Primitive leg;
        leg.kind = PrimitiveKind::kCapsule;
        leg.center = {side * 0.15, -0.75, 0.0};
        leg.radius = 0.11;
        leg.half_length = 0.34;
        leg.texture.kind = TextureKind::kSolid;
        leg.texture.front_a = palette();
        leg.texture.back_a = palette();
        s.primitives.push_back(leg);
    }
    return s;
}

SceneDescription make_preset(const std::string& name, Rng& rng) {
    if (name == "sphere") return preset_sphere();
    if (name == "blob") return preset_blob();
    if (name == "performer") return preset_performer(rng);
    throw ConfigError("unknown scene preset: " + name);
}

namespace {
json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

json mat_json(const Mat3& m) {
    json a = json::array();
    for (double x : m.m) a.push_back(x);
    return a;
}

Mat3 mat_from(const json& j) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m.m[i] = j.at(i);
    return m;
}

const char* kind_name(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::kSphere: return "sphere";
        case PrimitiveKind::kBox: return "box";
        case PrimitiveKind::kCapsule: return "capsule";
        case PrimitiveKind::kCylinder: return "cylinder";
    }
    return "sphere";
}

PrimitiveKind kind_from(const std::string& s) {
    if (s == "sphere") return PrimitiveKind::kSphere;
    if (s == "box") return PrimitiveKind::kBox;
    if (s == "capsule") return PrimitiveKind::kCapsule;
    if (s == "cylinder") return PrimitiveKind::kCylinder;
    throw ConfigError("unknown primitive kind: " + s);
}

const char* tex_name(TextureKind k) {
    switch (k) {
        case TextureKind::kSolid: return "solid";
        case TextureKind::kChecker: return "checker";
        case TextureKind::kStripes: return "stripes";
        case TextureKind::kSmooth: return "smooth";
    }
    return "solid";
}

TextureKind tex_from(const std::string& s) {
    if (s == "solid") return TextureKind::kSolid;
    if (s == "checker") return TextureKind::kChecker;
    if (s == "stripes") return TextureKind::kStripes;
    if (s == "smooth") return TextureKind::kSmooth;
    throw ConfigError("unknown texture kind: " + s);
}
}  // namespace

std::string SceneDescription::to_json() const {
    json j;
    j["primitives"] = json::array();
    for (const Primitive& p : primitives) {
        json pj;
        pj["kind"] = kind_name(p.kind);
        pj["center"] = vec_json(p.center);
        pj["orientation"] = mat_json(p.orientation);
        pj["radius"] = p.radius;
        pj["half_length"] = p.half_length;
        pj["half_extents"] = vec_json(p.half_extents);
        pj["texture"] = {{"kind", tex_name(p.texture.kind)},
                         {"scale", p.texture.scale},
                         {"front_a", vec_json(p.texture.front_a)},
                         {"front_b", vec_json(p.texture.front_b)},
                         {"back_a", vec_json(p.texture.back_a)},
                         {"back_b", vec_json(p.texture.back_b)}};
        pj["animation"] = {{"spin_axis", vec_json(p.animation.spin_axis)},
                           {"spin_rate", p.animation.spin_rate},
                           {"pivot", vec_json(p.animation.pivot)},
                           {"velocity", vec_json(p.animation.velocity)}};
        j["primitives"].push_back(pj);
    }
    return j.dump(2);
}

SceneDescription SceneDescription::from_json(const std::string& text) {
    json j = json::parse(text);
    SceneDescription s;
    for (const json& pj : j.at("primitives")) {
        Primitive p;
        p.kind = kind_from(pj.at("kind").get<std::string>());
        p.center = vec_from(pj.at("center"));
        if (pj.contains("orientation")) p.orientation = mat_from(pj["orientation"]);
        p.radius = pj.value("radius", 1.0);
        p.half_length = pj.value("half_length", 0.5);
        if (pj.contains("half_extents")) p.half_extents = vec_from(pj["half_extents"]);
        if (pj.contains("texture")) {
            const json& tj = pj["texture"];
            p.texture.kind = tex_from(tj.at("kind").get<std::string>());
            p.texture.scale = tj.value("scale", 0.25);
            if (tj.contains("front_a")) p.texture.front_a = vec_from(tj["front_a"]);
            if (tj.contains("front_b")) p.texture.front_b = vec_from(tj["front_b"]);
            if (tj.contains("back_a")) p.texture.back_a = vec_from(tj["back_a"]);
            if (tj.contains("back_b")) p.texture.back_b = vec_from(tj["back_b"]);
        }
        if (pj.contains("animation")) {
            const json& aj = pj["animation"];
            if (aj.contains("spin_axis")) p.animation.spin_axis = vec_from(aj["spin_axis"]);
            p.animation.spin_rate = aj.value("spin_rate", 0.0);
            if (aj.contains("pivot")) p.animation.pivot = vec_from(aj["pivot"]);
            if (aj.contains("velocity")) p.animation.velocity = vec_from(aj["velocity"]);
        }
        s.primitives.push_back(p);
    }
    return s;
}

void SceneDescription::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << to_json() << "\n";
}

SceneDescription SceneDescription::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace mvpf
