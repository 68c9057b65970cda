#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace herb {

// 8-bit interleaved image (row-major, HWC). Decoded images are RGB.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

class ImageDecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

RawImage make_image(int width, int height, int channels, std::uint8_t fill = 0);

// Decodes PNG or JPEG bytes to RGB8. EXIF orientation is applied.
RawImage decode_image(std::span<const std::uint8_t> bytes);
RawImage read_image(const std::filesystem::path& path);

// Encodes 1-channel (gray) or 3-channel (RGB) images.
std::vector<std::uint8_t> encode_png(const RawImage& image);
std::vector<std::uint8_t> encode_jpeg(const RawImage& image, int quality = 95);
void write_png(const std::filesystem::path& path, const RawImage& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace herb
