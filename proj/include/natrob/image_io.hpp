#pragma once

#include <filesystem>

#include "natrob/image.hpp"

namespace natrob {

Image read_png(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);
std::vector<uint8_t> encode_png(const Image& img);
Image decode_png(const uint8_t* data, size_t size);

Image read_jpeg(const std::filesystem::path& path);

// Dispatches on extension (.png / .jpg / .jpeg).
Image load_image(const std::filesystem::path& path);

// Baseline sequential JPEG, 4:2:0 subsampling, standard quality scaling.
std::vector<uint8_t> encode_jpeg(const Image& img, int quality);
Image decode_jpeg(const uint8_t* data, size_t size);

}  // namespace natrob
