#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rainflow {

/// Raised when raster dimensions or channel counts do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an input or intermediate contains NaN/Inf or a solve diverges.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major raster with interleaved channels. Samples are nominally in [0, 1].
///
/// Storage is double precision. Frames produced by the loaders and the rain
/// renderer hold values that are exactly representable as 32-bit floats, which
/// is what lets layer decompositions reconstruct their input bit-for-bit.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// Copy of channel `c` as a single-channel image.
  Image channel(int c) const;
  void set_channel(int c, const Image& plane);

  bool same_size(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool same_shape(const Image& other) const {
    return same_size(other) && channels_ == other.channels_;
  }
  bool all_finite() const;

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Per-pixel displacement (u right, v down) in pixels.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height, double u = 0.0, double v = 0.0);
  FlowField(int width, int height, std::vector<double> u, std::vector<double> v);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return u_.empty(); }

  double& u(int x, int y) { return u_[static_cast<std::size_t>(y) * width_ + x]; }
  double u(int x, int y) const { return u_[static_cast<std::size_t>(y) * width_ + x]; }
  double& v(int x, int y) { return v_[static_cast<std::size_t>(y) * width_ + x]; }
  double v(int x, int y) const { return v_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> u() { return u_; }
  std::span<const double> u() const { return u_; }
  std::span<double> v() { return v_; }
  std::span<const double> v() const { return v_; }

  bool same_size(const Image& img) const {
    return width_ == img.width() && height_ == img.height();
  }
  bool same_size(const FlowField& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool all_finite() const;
  double max_magnitude() const;

  bool operator==(const FlowField&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> u_;
  std::vector<double> v_;
};

/// Rounds every sample to the nearest 32-bit float and flushes magnitudes
/// below 2^-28 to zero.
void snap_to_float(Image& img);
Image snapped_to_float(Image img);

/// ITU-R 601 luminance (0.299, 0.587, 0.114). Single-channel input is copied.
Image to_luminance(const Image& img);

void require_same_size(const Image& a, const Image& b, const char* what);
void require_finite(const Image& img, const char* what);

}  // namespace rainflow
