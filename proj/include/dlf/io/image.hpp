#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace dlf {

// Planar float image, channel-major (C x H x W), nominal range [0, 1].
struct Image {
    int channels = 3;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    float& at(int c, int y, int x) { return data[index(c, y, x)]; }
    float at(int c, int y, int x) const { return data[index(c, y, x)]; }
    bool empty() const { return data.empty(); }
    bool same_shape(const Image& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// A padded image plus the size it had before padding.
struct ImagePlane {
    Image pixels;
    int orig_h = 0;
    int orig_w = 0;
};

// Replication-pads to the smallest multiples of `multiple` covering the input.
ImagePlane pad_to_multiple(const Image& image, int multiple = 16);
Image crop(const Image& image, int y0, int x0, int h, int w);

namespace io {

// PNG (8/16-bit, any colour type, converted to RGB) and binary PPM (P6).
Image read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);
void write_ppm(const std::filesystem::path& path, const Image& image);
// Dispatches on extension (.png or .ppm).
void write_image(const std::filesystem::path& path, const Image& image);

// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);
std::vector<unsigned char> read_file(const std::filesystem::path& path);

}  // namespace io
}  // namespace dlf
