#include "mvpf/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "mvpf/errors.hpp"

namespace mvpf {

namespace {
std::uint8_t to_u8(double v) {
    if (v <= 0.0) return 0;
    if (v >= 1.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes, int width,
                     int height, int channels) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for write: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }
    png_init_io(png, fp.get());
    const int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, width, height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = const_cast<png_bytep>(&bytes[static_cast<std::size_t>(y) * width * channels]);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_png_bytes(const std::string& path, int& width, int& height,
                                         int want_channels) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png read failed: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const png_byte color = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (want_channels == 3) {
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
            png_set_gray_to_rgb(png);
        }
        png_set_strip_alpha(png);
    } else {
        if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * want_channels);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = &bytes[static_cast<std::size_t>(y) * width * want_channels];
    }
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return bytes;
}

void put_f32_le(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                          static_cast<unsigned char>(bits >> 16),
                          static_cast<unsigned char>(bits >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

float get_f32(std::istream& is, bool little_endian) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("pfm truncated");
    std::uint32_t bits;
    if (little_endian) {
        bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    } else {
        bits = static_cast<std::uint32_t>(b[3]) | (static_cast<std::uint32_t>(b[2]) << 8) |
               (static_cast<std::uint32_t>(b[1]) << 16) | (static_cast<std::uint32_t>(b[0]) << 24);
    }
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void read_pfm_header(std::istream& is, const std::string& path, bool color_expected, int& w,
                     int& h, bool& little_endian) {
    std::string tag;
    is >> tag;
    const bool color = tag == "PF";
    if (tag != "Pf" && tag != "PF") throw IoError("not a pfm file: " + path);
    if (color != color_expected) {
        throw IoError(std::string("expected ") + (color_expected ? "color" : "grayscale") +
                      " pfm: " + path);
    }
    double scale = 0.0;
    is >> w >> h >> scale;
    if (!is || w <= 0 || h <= 0 || scale == 0.0) throw IoError("bad pfm header: " + path);
    is.get();  // single whitespace before the raster
    little_endian = scale < 0.0;
}
}  // namespace

void write_png(const std::string& path, const Image& img) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.width) * img.height * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_u8(img.data[i]);
    write_png_bytes(path, bytes, img.width, img.height, 3);
}

Image read_png(const std::string& path) {
    int w = 0, h = 0;
    const auto bytes = read_png_bytes(path, w, h, 3);
    Image img(w, h);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

void write_mask_png(const std::string& path, const std::vector<std::uint8_t>& mask, int width,
                    int height) {
    if (static_cast<int>(mask.size()) != width * height) throw DimensionError("mask size");
    std::vector<std::uint8_t> bytes(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
    write_png_bytes(path, bytes, width, height, 1);
}

std::vector<std::uint8_t> read_mask_png(const std::string& path, int& width, int& height) {
    auto bytes = read_png_bytes(path, width, height, 1);
    for (auto& b : bytes) b = b >= 128 ? 1 : 0;
    return bytes;
}

void write_pfm(const std::string& path, const DepthMap& depth) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "Pf\n" << depth.width << " " << depth.height << "\n-1.0\n";
    for (int y = depth.height - 1; y >= 0; --y) {
        for (int x = 0; x < depth.width; ++x) {
            put_f32_le(os, depth.is_valid(x, y) ? static_cast<float>(depth.at(x, y)) : 0.0f);
        }
    }
    if (!os) throw IoError("write failed: " + path);
}

DepthMap read_pfm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    int w = 0, h = 0;
    bool le = true;
    read_pfm_header(is, path, false, w, h, le);
    DepthMap depth(w, h);
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            const double v = get_f32(is, le);
            if (v > 0.0 && std::isfinite(v)) depth.set(x, y, v);
        }
    }
    return depth;
}

void write_pfm_rgb(const std::string& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x) {
            const double* p = img.px(x, y);
            for (int c = 0; c < 3; ++c) put_f32_le(os, static_cast<float>(p[c]));
        }
    }
    if (!os) throw IoError("write failed: " + path);
}

Image read_pfm_rgb(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    int w = 0, h = 0;
    bool le = true;
    read_pfm_header(is, path, true, w, h, le);
    Image img(w, h);
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            double* p = img.px(x, y);
            for (int c = 0; c < 3; ++c) p[c] = get_f32(is, le);
        }
    }
    return img;
}

void write_normals_pfm(const std::string& path, const NormalMap& normals) {
    Image img(normals.width, normals.height);
    for (int y = 0; y < normals.height; ++y) {
        for (int x = 0; x < normals.width; ++x) {
            if (!normals.is_valid(x, y)) continue;
            const Vec3& n = normals.at(x, y);
            double* p = img.px(x, y);
            p[0] = n.x;
            p[1] = n.y;
            p[2] = n.z;
        }
    }
    write_pfm_rgb(path, img);
}

NormalMap read_normals_pfm(const std::string& path) {
    const Image img = read_pfm_rgb(path);
    NormalMap nm(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double* p = img.px(x, y);
            const Vec3 n{p[0], p[1], p[2]};
            const double len = norm(n);
            if (len > 1e-6) nm.set(x, y, n * (1.0 / len));
        }
    }
    return nm;
}

}  // namespace mvpf
