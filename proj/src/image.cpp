#include "rainflow/image.hpp"

#include <algorithm>
#include <cmath>

namespace rainflow {

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    throw DimensionError("image dimensions must be at least 1x1, got " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw DimensionError("images have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DimensionError("image data length does not match width*height*channels");
  }
  if (!all_finite()) throw NumericalError("image constructed with non-finite samples");
}

Image Image::channel(int c) const {
  Image out(width_, height_, 1);
  const std::size_t n = pixel_count();
  for (std::size_t i = 0; i < n; ++i) out.data_[i] = data_[i * channels_ + c];
  return out;
}

void Image::set_channel(int c, const Image& plane) {
  if (!same_size(plane) || plane.channels() != 1) {
    throw DimensionError("set_channel expects a single-channel plane of equal size");
  }
  const std::size_t n = pixel_count();
  for (std::size_t i = 0; i < n; ++i) data_[i * channels_ + c] = plane.data_[i];
}

bool Image::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double s) { return std::isfinite(s); });
}

FlowField::FlowField(int width, int height, double u, double v)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) throw DimensionError("flow dimensions must be at least 1x1");
  u_.assign(pixel_count(), u);
  v_.assign(pixel_count(), v);
}

FlowField::FlowField(int width, int height, std::vector<double> u, std::vector<double> v)
    : width_(width), height_(height), u_(std::move(u)), v_(std::move(v)) {
  if (width < 1 || height < 1) throw DimensionError("flow dimensions must be at least 1x1");
  if (u_.size() != pixel_count() || v_.size() != pixel_count()) {
    throw DimensionError("flow component length does not match width*height");
  }
}

bool FlowField::all_finite() const {
  auto finite = [](double s) { return std::isfinite(s); };
  return std::all_of(u_.begin(), u_.end(), finite) && std::all_of(v_.begin(), v_.end(), finite);
}

double FlowField::max_magnitude() const {
  double best = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i) best = std::max(best, std::hypot(u_[i], v_[i]));
  return best;
}

void snap_to_float(Image& img) {
  constexpr double kFlush = 0x1p-28;
  for (double& s : img.data()) {
    s = static_cast<double>(static_cast<float>(s));
    if (std::abs(s) < kFlush) s = 0.0;
  }
}

Image snapped_to_float(Image img) {
  snap_to_float(img);
  return img;
}

Image to_luminance(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
  }
  return out;
}

void require_same_size(const Image& a, const Image& b, const char* what) {
  if (!a.same_size(b)) {
    throw DimensionError(std::string(what) + ": size mismatch (" + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                         "x" + std::to_string(b.height()) + ")");
  }
}

void require_finite(const Image& img, const char* what) {
  if (!img.all_finite()) throw NumericalError(std::string(what) + ": non-finite samples");
}

}  // namespace rainflow
