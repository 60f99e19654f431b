#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvpf/geometry.hpp"

namespace mvpf {

// 8-bit RGB PNG. Values are clamped to [0, 1] and quantized with round().
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Single-channel 8-bit PNG for masks (0 or 255).
void write_mask_png(const std::string& path, const std::vector<std::uint8_t>& mask, int width,
                    int height);
std::vector<std::uint8_t> read_mask_png(const std::string& path, int& width, int& height);

// PFM, little-endian (negative scale), rows stored bottom-to-top per the
// format convention. Grayscale "Pf" carries depth; invalid pixels are
// written as 0 and anything non-positive or non-finite reads back invalid.
void write_pfm(const std::string& path, const DepthMap& depth);
DepthMap read_pfm(const std::string& path);

// Color "PF" variant, used for raw 3-vector data (e.g. normal maps).
void write_pfm_rgb(const std::string& path, const Image& img);
Image read_pfm_rgb(const std::string& path);

// Normal maps ride in color PFMs as raw vectors; zero vectors mark invalid.
void write_normals_pfm(const std::string& path, const NormalMap& normals);
NormalMap read_normals_pfm(const std::string& path);

}  // namespace mvpf
