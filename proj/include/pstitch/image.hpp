#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pstitch {

/// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int ch, std::uint8_t fill = 0)
      : width(w), height(h), channels(ch), data(static_cast<std::size_t>(w) * h * ch, fill) {}

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Row-major float intensity plane indexed (y, x).
using GrayImage = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Row-major coverage / label plane indexed (y, x); nonzero means set.
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reads an 8-bit PNG or JPEG; the result has 1 or 3 channels.
Image load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& image);
void save_mask_png(const std::filesystem::path& path, const Mask& mask);

GrayImage to_gray(const Image& image);
Image gray_to_image(const GrayImage& gray);
Image to_rgb(const Image& image);

/// Bilinear sample of one channel with clamp-to-edge addressing.
double sample_bilinear(const Image& image, double x, double y, int channel);
float sample_bilinear(const GrayImage& image, double x, double y);

}  // namespace pstitch
