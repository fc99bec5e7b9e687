#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace hvs {

/// Row-major, channel-interleaved intensity buffer with values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Luma 0.299 R + 0.587 G + 0.114 B. Grayscale input is returned unchanged.
Image to_grayscale(const Image& img);

/// Box-filter resampling; exact block averages when the scale is integral.
Image downsample(const Image& img, int width, int height);

/// Binary P6 (3 channels) or P5 (1 channel), maxval 255, round-to-nearest.
void write_pnm(const std::filesystem::path& path, const Image& img);
Image read_pnm(const std::filesystem::path& path);

std::vector<unsigned char> encode_pnm(const Image& img);
Image decode_pnm(std::span<const unsigned char> bytes);

}  // namespace hvs
