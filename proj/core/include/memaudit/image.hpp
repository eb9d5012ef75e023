#pragma once

#include <cstddef>
#include <vector>

namespace memaudit {

// H x W x C pixel array in [0,1], row-major with channel fastest.
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h_, int w_, int c_, double fill = 0.0)
      : h(h_), w(w_), c(c_), pixels(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

  std::size_t dim() const { return pixels.size(); }

  double& at(int y, int x, int ch) {
    return pixels[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  double at(int y, int x, int ch) const {
    return pixels[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }

  bool same_shape(const Image& other) const {
    return h == other.h && w == other.w && c == other.c;
  }
};

Image flip_horizontal(const Image& img);

// Fixed affine map between the [0,1] storage range and the [-1,1] model range.
std::vector<double> to_model_range(const Image& img);
Image from_model_range(const std::vector<double>& v, int h, int w, int c);

// Mean and variance over all pixels.
double pixel_mean(const Image& img);
double pixel_variance(const Image& img);

}  // namespace memaudit
