#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dlf/io/image.hpp"

namespace dlf::io {

struct DatasetSpec {
    // Directory of .png/.ppm files, or "toy:<count>" for the synthetic set.
    std::string root;
    int crop = 64;
    std::array<double, 3> split = {0.8, 0.1, 0.1};  // train / val / test
    std::uint64_t seed = 0;
    int max_images = 0;  // 0 = no limit

    void validate() const;
};

struct Dataset {
    std::vector<Image> train, val, test;
    std::size_t size() const { return train.size() + val.size() + test.size(); }
};

// Smooth two-colour gradient with a few soft-edged discs, boxes and bands,
// some carrying a low-amplitude stripe texture.
Image make_toy_image(std::mt19937_64& rng, int size);
std::vector<Image> make_toy_set(int count, int size, std::uint64_t seed);

// Loads, crops (one seeded crop per file), and splits. When DLF_CACHE_DIR
// is set, crops are cached there as PPM keyed by file, size, crop and seed.
Dataset load_dataset(const DatasetSpec& spec);

}  // namespace dlf::io
