#include "herb/common/image.hpp"

#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace herb {

namespace {

cv::Mat to_bgr_mat(const RawImage& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw std::invalid_argument("cannot encode image with " + std::to_string(image.channels) + " channels");
    }
    cv::Mat mat(image.height, image.width, image.channels == 1 ? CV_8UC1 : CV_8UC3);
    std::size_t i = 0;
    for (int y = 0; y < image.height; ++y) {
        auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < image.width; ++x) {
            if (image.channels == 1) {
                row[x] = image.pixels[i++];
            } else {
                row[3 * x + 2] = image.pixels[i++];
                row[3 * x + 1] = image.pixels[i++];
                row[3 * x + 0] = image.pixels[i++];
            }
        }
    }
    return mat;
}

std::vector<std::uint8_t> encode(const RawImage& image, const std::string& ext, const std::vector<int>& params) {
    std::vector<std::uint8_t> out;
    if (!cv::imencode(ext, to_bgr_mat(image), out, params)) {
        throw std::runtime_error("failed to encode " + ext);
    }
    return out;
}

}  // namespace

RawImage make_image(int width, int height, int channels, std::uint8_t fill) {
    RawImage img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.assign(static_cast<std::size_t>(width) * height * channels, fill);
    return img;
}

RawImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw ImageDecodeError("empty image payload");
    cv::Mat mat;
    try {
        const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
        mat = cv::imdecode(buffer, cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw ImageDecodeError(std::string("image decode failed: ") + e.what());
    }
    if (mat.empty() || mat.type() != CV_8UC3) {
        throw ImageDecodeError("payload is not a decodable PNG or JPEG image");
    }
    RawImage img = make_image(mat.cols, mat.rows, 3);
    std::size_t i = 0;
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < mat.cols; ++x) {
            img.pixels[i++] = row[3 * x + 2];
            img.pixels[i++] = row[3 * x + 1];
            img.pixels[i++] = row[3 * x + 0];
        }
    }
    return img;
}

RawImage read_image(const std::filesystem::path& path) {
    return decode_image(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_png(const RawImage& image) {
    return encode(image, ".png", {});
}

std::vector<std::uint8_t> encode_jpeg(const RawImage& image, int quality) {
    return encode(image, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
    write_file_bytes(path, encode_png(image));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace herb
