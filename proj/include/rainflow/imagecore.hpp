#pragma once

#include <utility>
#include <vector>

#include "rainflow/image.hpp"

namespace rainflow {

/// Coarse-to-fine stack; level 0 is the full-resolution input.
struct Pyramid {
  std::vector<Image> levels;
  double scale_factor = 0.5;

  std::size_t size() const { return levels.size(); }
  const Image& operator[](std::size_t k) const { return levels[k]; }
};

/// Level dimensions a pyramid of `width` x `height` would have.
std::vector<std::pair<int, int>> pyramid_sizes(int width, int height, double scale_factor,
                                               int min_size);

/// Gaussian low-pass (sigma = 1/sqrt(2*scale_factor)) followed by bilinear
/// resampling, repeated until the next level would drop below `min_size` in
/// either dimension.
Pyramid build_pyramid(const Image& img, double scale_factor, int min_size);

/// Separable Gaussian blur with clamp-to-edge borders. Constant images are
/// reproduced exactly.
Image gaussian_blur(const Image& img, double sigma);

/// Pixel-centre aligned bilinear resize with clamp-to-edge borders.
Image resize_bilinear(const Image& img, int new_width, int new_height);

/// Bilinear sample at continuous pixel coordinates (integer = pixel centre).
/// Coordinates are clamped to the image.
double sample_bilinear(const Image& img, double x, double y, int c = 0);

/// Analytic derivative of the bilinear interpolant with respect to x and y.
/// Zero along a clamped axis.
std::pair<double, double> sample_bilinear_gradient(const Image& img, double x, double y,
                                                   int c = 0);

struct WarpResult {
  Image image;
  /// 1 where x + u(x) fell inside the frame, 0 where it was clamped.
  Image valid;
};

/// output(x) = img(x + u(x)).
WarpResult warp(const Image& img, const FlowField& flow);

/// Forward differences with a zero last column/row, per channel.
std::pair<Image, Image> gradient(const Image& img);

/// Five-point central derivative (-1, 8, 0, -8, 1)/12 with clamped borders.
Image derivative_x(const Image& img);
Image derivative_y(const Image& img);

/// Bilinear resample of both components with u scaled by new_w/old_w and v by
/// new_h/old_h.
FlowField resample_flow(const FlowField& flow, int new_width, int new_height);

/// Component-wise median over a (2r+1)^2 clamped window. r = 0 is a copy.
FlowField median_filter(const FlowField& flow, int radius);

}  // namespace rainflow
