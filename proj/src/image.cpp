#include "pstitch/image.hpp"

#include <png.h>
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <fstream>
#include <memory>

#include "pstitch/error.hpp"

namespace pstitch {
namespace {

Image load_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw StitchError(ErrorCode::kIoError, "cannot decode PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image out(static_cast<int>(png.width), static_cast<int>(png.height), color ? 3 : 1);
  if (!png_image_finish_read(&png, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&png);
    throw StitchError(ErrorCode::kIoError, "cannot decode PNG " + path.string() + ": " + png.message);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  std::longjmp(err->jump, 1);
}

Image load_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw StitchError(ErrorCode::kIoError, "cannot open " + path.string());

  jpeg_decompress_struct info{};
  JpegErrorManager err{};
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  Image out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    throw StitchError(ErrorCode::kIoError, "cannot decode JPEG " + path.string());
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file.get());
  jpeg_read_header(&info, TRUE);
  info.out_color_space = info.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&info);
  out = Image(static_cast<int>(info.output_width), static_cast<int>(info.output_height),
              info.output_components);
  const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = out.data.data() + info.output_scanline * stride;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return out;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StitchError(ErrorCode::kIoError, "cannot open " + path.string());
  std::array<unsigned char, 4> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  if (in.gcount() >= 4 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G') {
    return load_png(path);
  }
  if (in.gcount() >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) {
    return load_jpeg(path);
  }
  throw StitchError(ErrorCode::kIoError, "unsupported image format: " + path.string());
}

void save_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw StitchError(ErrorCode::kInvalidArgument, "PNG output needs 1 or 3 channels");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr)) {
    throw StitchError(ErrorCode::kIoError, "cannot write PNG " + path.string() + ": " + png.message);
  }
}

void save_mask_png(const std::filesystem::path& path, const Mask& mask) {
  Image img(static_cast<int>(mask.cols()), static_cast<int>(mask.rows()), 1);
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x)
      img.at(static_cast<int>(x), static_cast<int>(y)) = mask(y, x) ? 255 : 0;
  save_png(path, img);
}

GrayImage to_gray(const Image& image) {
  GrayImage g(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (image.channels >= 3) {
        g(y, x) = 0.299f * image.at(x, y, 0) + 0.587f * image.at(x, y, 1) + 0.114f * image.at(x, y, 2);
      } else {
        g(y, x) = image.at(x, y, 0);
      }
    }
  }
  return g;
}

Image gray_to_image(const GrayImage& gray) {
  Image img(static_cast<int>(gray.cols()), static_cast<int>(gray.rows()), 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(gray(y, x)), 0L, 255L));
  return img;
}

Image to_rgb(const Image& image) {
  if (image.channels == 3) return image;
  Image out(image.width, image.height, 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(x, y, 0);
  return out;
}

double sample_bilinear(const Image& image, double x, double y, int channel) {
  x = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.width - 1);
  const int y1 = std::min(y0 + 1, image.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1 - fx) * image.at(x0, y0, channel) + fx * image.at(x1, y0, channel);
  const double bottom = (1 - fx) * image.at(x0, y1, channel) + fx * image.at(x1, y1, channel);
  return (1 - fy) * top + fy * bottom;
}

float sample_bilinear(const GrayImage& image, double x, double y) {
  const int w = static_cast<int>(image.cols());
  const int h = static_cast<int>(image.rows());
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1 - fx) * image(y0, x0) + fx * image(y0, x1);
  const double bottom = (1 - fx) * image(y1, x0) + fx * image(y1, x1);
  return static_cast<float>((1 - fy) * top + fy * bottom);
}

}  // namespace pstitch
