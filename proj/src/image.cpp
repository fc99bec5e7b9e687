#include "hvs/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace hvs {

Image::Image(int w, int h, int c, double fill) : width(w), height(h), channels(c) {
  if (w < 0 || h < 0 || (c != 1 && c != 3)) {
    throw std::invalid_argument("Image: bad shape");
  }
  data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw std::invalid_argument("to_grayscale: expected 1 or 3 channels");
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double* px = &img.data[3 * i];
    out.data[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

Image downsample(const Image& img, int width, int height) {
  if (width < 1 || height < 1 || width > img.width || height > img.height) {
    throw std::invalid_argument("downsample: target size must be within (0, source]");
  }
  if (width == img.width && height == img.height) return img;

  Image out(width, height, img.channels);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;

  // Each output pixel averages the source area it covers, weighting partial
  // source pixels by overlap.
  for (int oy = 0; oy < height; ++oy) {
    const double y0 = oy * sy;
    const double y1 = y0 + sy;
    for (int ox = 0; ox < width; ++ox) {
      const double x0 = ox * sx;
      const double x1 = x0 + sx;
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)); ++iy) {
          const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
          for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)); ++ix) {
            const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
            acc += wx * wy * img.at(ix, iy, c);
          }
        }
        out.at(ox, oy, c) = acc / (sx * sy);
      }
    }
  }
  return out;
}

namespace {

unsigned char quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

}  // namespace

std::vector<unsigned char> encode_pnm(const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("encode_pnm: bad channels");
  const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.data.size());
  for (double v : img.data) bytes.push_back(quantize(v));
  return bytes;
}

Image decode_pnm(std::span<const unsigned char> bytes) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw std::runtime_error("decode_pnm: malformed header");
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos++] - '0');
      if (value > (1L << 24)) throw std::runtime_error("decode_pnm: header value too large");
    }
    return static_cast<int>(value);
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw std::runtime_error("decode_pnm: not a binary PGM/PPM");
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  pos = 2;
  const int width = read_int();
  const int height = read_int();
  const int maxval = read_int();
  if (maxval != 255) throw std::runtime_error("decode_pnm: only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw std::runtime_error("decode_pnm: malformed header");
  ++pos;

  Image img(width, height, channels);
  if (bytes.size() - pos < img.data.size()) throw std::runtime_error("decode_pnm: truncated pixel data");
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = bytes[pos + i] / 255.0;
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_pnm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pnm: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_pnm: write failed for " + path.string());
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pnm: cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes);
}

}  // namespace hvs
