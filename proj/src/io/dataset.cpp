#include "dlf/io/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "dlf/error.hpp"

namespace dlf::io {

void DatasetSpec::validate() const {
    require(crop >= 16 && crop % 16 == 0, ErrorKind::config, "crop size must be a positive multiple of 16");
    double sum = 0.0;
    for (double r : split) {
        require(r >= 0.0, ErrorKind::config, "split ratios must be >= 0");
        sum += r;
    }
    require(std::abs(sum - 1.0) < 1e-9, ErrorKind::config, "split ratios must sum to 1");
    require(max_images >= 0, ErrorKind::config, "max_images must be >= 0");
}

namespace {

float smoothstep(float edge, float v) {
    // 0 outside, 1 inside, ~1.5 px ramp around the boundary at v == edge.
    const float t = std::clamp((edge - v) / 1.5f + 0.5f, 0.0f, 1.0f);
    return t * t * (3.0f - 2.0f * t);
}

}  // namespace

Image make_toy_image(std::mt19937_64& rng, int size) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(3, size, size);
    std::array<float, 3> c0{}, c1{};
    for (int c = 0; c < 3; ++c) {
        c0[c] = 0.1f + 0.8f * u(rng);
        c1[c] = 0.1f + 0.8f * u(rng);
    }
    const float theta = 2.0f * std::numbers::pi_v<float> * u(rng);
    const float dx = std::cos(theta), dy = std::sin(theta);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const float t = std::clamp(0.5f + ((x - size / 2.0f) * dx + (y - size / 2.0f) * dy) / size, 0.0f, 1.0f);
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = c0[c] + (c1[c] - c0[c]) * t;
        }

    const int shapes = 1 + static_cast<int>(u(rng) * 3.0f);
    for (int s = 0; s < shapes; ++s) {
        const int kind = static_cast<int>(u(rng) * 3.0f);
        std::array<float, 3> col{};
        for (float& v : col) v = 0.05f + 0.9f * u(rng);
        const float cx = size * (0.2f + 0.6f * u(rng)), cy = size * (0.2f + 0.6f * u(rng));
        const float r = size * (0.1f + 0.2f * u(rng));
        const float hw = size * (0.08f + 0.2f * u(rng)), hh = size * (0.08f + 0.2f * u(rng));
        const float phi = std::numbers::pi_v<float> * u(rng);
        const bool textured = u(rng) < 0.4f;
        const float period = 4.0f + 6.0f * u(rng);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const float px = x + 0.5f - cx, py = y + 0.5f - cy;
                float alpha = 0.0f;
                if (kind == 0) {
                    alpha = smoothstep(r, std::hypot(px, py));
                } else if (kind == 1) {
                    alpha = smoothstep(hw, std::abs(px)) * smoothstep(hh, std::abs(py));
                } else {
                    const float d = px * std::cos(phi) + py * std::sin(phi);
                    alpha = smoothstep(hh * 0.5f, std::abs(d));
                }
                if (alpha <= 0.0f) continue;
                const float tex = textured ? 0.08f * std::sin(2.0f * std::numbers::pi_v<float> * (px + py) / period) : 0.0f;
                for (int c = 0; c < 3; ++c) {
                    const float v = std::clamp(col[c] + tex, 0.0f, 1.0f);
                    img.at(c, y, x) = img.at(c, y, x) * (1.0f - alpha) + v * alpha;
                }
            }
    }
    return img;
}

std::vector<Image> make_toy_set(int count, int size, std::uint64_t seed) {
    require(count >= 0 && size >= 1, ErrorKind::invalid_input, "bad toy set parameters");
    std::mt19937_64 rng(seed);
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(make_toy_image(rng, size));
    return out;
}

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

Image seeded_crop(const Image& img, int crop, std::mt19937_64& rng) {
    const Image base = (img.height < crop || img.width < crop) ? pad_to_multiple(img, crop).pixels : img;
    std::uniform_int_distribution<int> oy(0, base.height - crop), ox(0, base.width - crop);
    const int y0 = oy(rng), x0 = ox(rng);
    return dlf::crop(base, y0, x0, crop, crop);
}

std::vector<Image> load_directory(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(spec.root)) fail(ErrorKind::io, "dataset root is not a directory: " + spec.root);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(spec.root)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (spec.max_images > 0 && files.size() > static_cast<std::size_t>(spec.max_images))
        files.resize(static_cast<std::size_t>(spec.max_images));

    const char* cache_env = std::getenv("DLF_CACHE_DIR");
    const fs::path cache_dir = cache_env ? fs::path(cache_env) : fs::path();
    if (!cache_dir.empty()) fs::create_directories(cache_dir);

    std::vector<Image> out;
    for (const auto& file : files) {
        const auto key = file.string() + "|" + std::to_string(fs::file_size(file)) + "|" +
                         std::to_string(spec.crop) + "|" + std::to_string(spec.seed);
        const std::uint64_t h = fnv1a(key);
        fs::path cached;
        if (!cache_dir.empty()) {
            cached = cache_dir / (std::to_string(h) + ".ppm");
            if (fs::exists(cached)) {
                out.push_back(read_image(cached));
                continue;
            }
        }
        std::mt19937_64 rng(spec.seed ^ h);
        Image img = seeded_crop(read_image(file), spec.crop, rng);
        if (!cached.empty()) write_ppm(cached, img);
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace

Dataset load_dataset(const DatasetSpec& spec) {
    spec.validate();
    std::vector<Image> images;
    if (spec.root.rfind("toy:", 0) == 0) {
        const int count = std::atoi(spec.root.c_str() + 4);
        require(count >= 0, ErrorKind::config, "bad toy count");
        const int n = spec.max_images > 0 ? std::min(count, spec.max_images) : count;
        images = make_toy_set(n, spec.crop, spec.seed);
    } else {
        images = load_directory(spec);
    }
    require(!images.empty(), ErrorKind::invalid_input, "dataset is empty");

    std::vector<std::size_t> order(images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(spec.seed + 0x9e3779b97f4a7c15ull);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n = static_cast<double>(images.size());
    const auto n_train = static_cast<std::size_t>(std::llround(spec.split[0] * n));
    const auto n_val = static_cast<std::size_t>(std::llround(spec.split[1] * n));
    Dataset ds;
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& dst = i < n_train ? ds.train : (i < n_train + n_val ? ds.val : ds.test);
        dst.push_back(std::move(images[order[i]]));
    }
    return ds;
}

}  // namespace dlf::io
