#include "mvpf/rig.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace mvpf {

using nlohmann::json;

Camera look_at_camera(const Vec3& center, const Vec3& target, double focal, int width,
                      int height) {
    const Vec3 forward = normalized(target - center);
    Vec3 up{0.0, 1.0, 0.0};
    if (std::abs(dot(up, forward)) > 0.999) up = {1.0, 0.0, 0.0};  // near-vertical view
    const Vec3 right = normalized(cross(up, forward));
    const Vec3 down_up = cross(forward, right);  // completes a det +1 frame
    Camera cam = make_simple_camera(focal, width, height, Mat3::from_rows(right, down_up, forward),
                                    {0, 0, 0});
    cam.t = -(cam.R * center);
    cam.validate();
    return cam;
}

std::vector<Camera> make_rig(const RigSpec& spec) {
    if (spec.views < 1) throw ContractError("rig needs at least one view");
    if (spec.radius <= 0.0) throw ContractError("rig radius must be positive");
    std::vector<Camera> cams;
    cams.reserve(spec.views);
    for (int i = 0; i < spec.views; ++i) {
        const double az =
            spec.azimuth_start + 2.0 * M_PI * static_cast<double>(i) / spec.views;
        const Vec3 center = spec.target + Vec3{spec.radius * std::cos(az), spec.height,
                                               spec.radius * std::sin(az)};
        cams.push_back(look_at_camera(center, spec.target, spec.focal, spec.image_width,
                                      spec.image_height));
    }
    return cams;
}

std::string cameras_to_json(const std::vector<Camera>& cams) {
    json arr = json::array();
    for (const Camera& c : cams) {
        json k = json::array(), r = json::array();
        for (double v : c.K.m) k.push_back(v);
        for (double v : c.R.m) r.push_back(v);
        arr.push_back({{"K", k},
                       {"R", r},
                       {"t", json::array({c.t.x, c.t.y, c.t.z})},
                       {"width", c.width},
                       {"height", c.height}});
    }
    return arr.dump(2);
}

std::vector<Camera> cameras_from_json(const std::string& text) {
    json arr = json::parse(text);
    if (!arr.is_array()) throw IoError("camera rig file must be a JSON array");
    std::vector<Camera> cams;
    for (const json& cj : arr) {
        Camera c;
        for (int i = 0; i < 9; ++i) c.K.m[i] = cj.at("K").at(i);
        for (int i = 0; i < 9; ++i) c.R.m[i] = cj.at("R").at(i);
        c.t = {cj.at("t").at(0), cj.at("t").at(1), cj.at("t").at(2)};
        c.width = cj.at("width");
        c.height = cj.at("height");
        c.validate();
        cams.push_back(c);
    }
    return cams;
}

void save_cameras(const std::string& path, const std::vector<Camera>& cams) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << cameras_to_json(cams) << "\n";
}

std::vector<Camera> load_cameras(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return cameras_from_json(text);
}

}  // namespace mvpf
