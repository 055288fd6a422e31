#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rainflow/image.hpp"

namespace rainflow {

enum class IoErrorKind {
  open_failed,
  write_failed,
  unsupported_format,
  bad_header,
  bad_magic,
  truncated,
  corrupt_data,
  size_mismatch,
  dimension_overflow,
  invalid_value,
};

std::string to_string(IoErrorKind kind);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

/// Largest accepted width or height, and pixel count, for decoded rasters.
inline constexpr std::int64_t kMaxDimension = 1 << 16;
inline constexpr std::int64_t kMaxPixels = std::int64_t{1} << 28;

/// Flow components above this magnitude mark unknown ground truth.
inline constexpr double kUnknownFlow = 1e9;

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

/// PNG (any bit depth and colour type; alpha is dropped) or binary PGM/PPM
/// (P5/P6, maxval up to 65535). Gray inputs give 1 channel, colour inputs 3.
/// Samples are k / maxval rounded to float.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::string& path);

/// bit_depth is 8 or 16. Samples are clamped to [0, 1] and rounded.
std::vector<std::uint8_t> encode_png(const Image& img, int bit_depth = 8);
std::vector<std::uint8_t> encode_pnm(const Image& img, int bit_depth = 8);
/// Format chosen by extension: .png, or .ppm/.pgm/.pnm.
void write_image(const Image& img, const std::string& path, int bit_depth = 8);

/// Middlebury .flo layout: "PIEH", int32 width, int32 height, then
/// interleaved float32 (u, v), all little-endian.
FlowField decode_flo(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField read_flo(const std::string& path);
void write_flo(const FlowField& flow, const std::string& path);

/// 1 where both components are known (magnitude <= kUnknownFlow).
Image known_mask(const FlowField& flow);

/// Middlebury colour wheel. Hue encodes direction, saturation magnitude
/// relative to `max_magnitude`; zero flow is white. max_magnitude <= 0 uses
/// the largest known magnitude in the field. Unknown vectors render black.
Image flow_to_color(const FlowField& flow, double max_magnitude = 0.0);

}  // namespace rainflow
