#include "dlf/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "dlf/error.hpp"

namespace dlf {

ImagePlane pad_to_multiple(const Image& image, int multiple) {
    require(multiple >= 1, ErrorKind::invalid_input, "pad multiple must be >= 1");
    require(image.height >= 1 && image.width >= 1 && !image.empty(), ErrorKind::invalid_input, "empty image");
    const int h = (image.height + multiple - 1) / multiple * multiple;
    const int w = (image.width + multiple - 1) / multiple * multiple;
    ImagePlane plane{Image(image.channels, h, w), image.height, image.width};
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                plane.pixels.at(c, y, x) = image.at(c, std::min(y, image.height - 1), std::min(x, image.width - 1));
    return plane;
}

Image crop(const Image& image, int y0, int x0, int h, int w) {
    require(y0 >= 0 && x0 >= 0 && h >= 0 && w >= 0 && y0 + h <= image.height && x0 + w <= image.width,
            ErrorKind::shape, "crop outside image");
    Image out(image.channels, h, w);
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = image.at(c, y0 + y, x0 + x);
    return out;
}

namespace io {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
    auto e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return e;
}

std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

Image read_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.string().c_str()))
        fail(ErrorKind::io, "cannot read png " + path.string() + ": " + img.message);
    img.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&img);
        fail(ErrorKind::io, "cannot decode png " + path.string() + ": " + img.message);
    }
    const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);
    Image out(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(c, y, x) = static_cast<float>(buf[(static_cast<std::size_t>(y) * w + x) * 3 + c]) / 255.0f;
    return out;
}

// Skips whitespace and '#' comments between PPM header tokens.
int read_ppm_int(std::istream& in) {
    int ch;
    while ((ch = in.peek()) != EOF) {
        if (std::isspace(ch)) {
            in.get();
        } else if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
    }
    int v = -1;
    in >> v;
    if (!in || v < 0) fail(ErrorKind::io, "malformed ppm header");
    return v;
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P6" && magic != "P3") fail(ErrorKind::io, "unsupported ppm magic in " + path.string());
    const int w = read_ppm_int(in), h = read_ppm_int(in), maxval = read_ppm_int(in);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) fail(ErrorKind::io, "bad ppm dimensions");
    Image out(3, h, w);
    const float scale = 1.0f / static_cast<float>(maxval);
    if (magic == "P3") {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(read_ppm_int(in)) * scale;
        return out;
    }
    in.get();  // single whitespace after maxval
    const int bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3 * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(ErrorKind::io, "truncated ppm " + path.string());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3 + c;
                const int v = bytes_per == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
                out.at(c, y, x) = static_cast<float>(v) * scale;
            }
    return out;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) fail(ErrorKind::io, "no such image file: " + path.string());
    const auto ext = lower_ext(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".ppm" || ext == ".pnm") return read_ppm(path);
    fail(ErrorKind::io, "unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& image) {
    require(image.channels == 3, ErrorKind::invalid_input, "png writer expects 3 channels");
    std::vector<png_byte> buf(static_cast<std::size_t>(image.height) * image.width * 3);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c)
                buf[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] = to_byte(image.at(c, y, x));
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, buf.data(), 0, nullptr))
        fail(ErrorKind::io, std::string("png encode failed: ") + img.message);
    std::vector<unsigned char> bytes(size);
    if (!png_image_write_to_memory(&img, bytes.data(), &size, 0, buf.data(), 0, nullptr))
        fail(ErrorKind::io, std::string("png encode failed: ") + img.message);
    bytes.resize(size);
    write_file_atomic(path, bytes);
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
    require(image.channels == 3, ErrorKind::invalid_input, "ppm writer expects 3 channels");
    std::ostringstream header;
    header << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    const auto h = header.str();
    std::vector<unsigned char> bytes(h.begin(), h.end());
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) bytes.push_back(to_byte(image.at(c, y, x)));
    write_file_atomic(path, bytes);
}

void write_image(const std::filesystem::path& path, const Image& image) {
    const auto ext = lower_ext(path);
    if (ext == ".png") return write_png(path, image);
    if (ext == ".ppm") return write_ppm(path, image);
    fail(ErrorKind::io, "unsupported output format: " + path.string());
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorKind::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::io, "cannot move output into place: " + path.string());
    }
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace io
}  // namespace dlf
