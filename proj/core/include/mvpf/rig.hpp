#pragma once

#include <string>
#include <vector>

#include "mvpf/geometry.hpp"

namespace mvpf {

// Ring of inward-looking cameras, evenly spaced in azimuth around target.
struct RigSpec {
    int views = 4;
    double radius = 3.0;
    double height = 0.0;  // camera height above the target plane
    Vec3 target{0.0, 0.0, 0.0};
    double focal = 300.0;  // pixels
    int image_width = 256;
    int image_height = 256;
    // Azimuth of the first camera; -pi/2 puts it on the -z side, facing the
    // performer presets' front.
    double azimuth_start = -1.5707963267948966;
};

Camera look_at_camera(const Vec3& center, const Vec3& target, double focal, int width,
                      int height);

std::vector<Camera> make_rig(const RigSpec& spec);

// Camera rig JSON: array of {K: 9 row-major, R: 9 row-major, t: 3, width,
// height}.
std::string cameras_to_json(const std::vector<Camera>& cams);
std::vector<Camera> cameras_from_json(const std::string& text);
void save_cameras(const std::string& path, const std::vector<Camera>& cams);
std::vector<Camera> load_cameras(const std::string& path);

}  // namespace mvpf
