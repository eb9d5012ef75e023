#include "memaudit/image.hpp"

#include <algorithm>

namespace memaudit {

Image flip_horizontal(const Image& img) {
  Image out(img.h, img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch)
        out.at(y, x, ch) = img.at(y, img.w - 1 - x, ch);
  return out;
}

std::vector<double> to_model_range(const Image& img) {
  std::vector<double> v(img.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = img.pixels[i] * 2.0 - 1.0;
  return v;
}

Image from_model_range(const std::vector<double>& v, int h, int w, int c) {
  Image out(h, w, c);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double clamped = std::clamp(v[i], -1.0, 1.0);
    out.pixels[i] = (clamped + 1.0) * 0.5;
  }
  return out;
}

double pixel_mean(const Image& img) {
  double s = 0.0;
  for (double p : img.pixels) s += p;
  return img.pixels.empty() ? 0.0 : s / static_cast<double>(img.pixels.size());
}

double pixel_variance(const Image& img) {
  const double m = pixel_mean(img);
  double s = 0.0;
  for (double p : img.pixels) s += (p - m) * (p - m);
  return img.pixels.empty() ? 0.0 : s / static_cast<double>(img.pixels.size());
}

}  // namespace memaudit
