#pragma once

#include <cstdint>

#include "rainflow/image.hpp"

namespace rainflow {

/// Streak renderer settings. Angles are measured from vertical, in degrees.
struct RainParams {
  double tau_min = 0.0;
  double tau_max = 0.5;
  double angle_min_deg = -15.0;
  double angle_max_deg = 15.0;
  double streak_density = 10000.0;  ///< streaks per megapixel
  double streak_length = 24.0;     ///< mean length, pixels
  double length_jitter = 8.0;      ///< half-width of the uniform length spread
  double streak_width = 1.5;       ///< pixels
  double rain_radiance = 0.9;      ///< same on every channel
  double accumulation = 0.0;       ///< veil ratio A in [0, 1)
  double airlight = 0.8;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const RainParams&) const = default;
};

struct RainRender {
  Image image;
  Image tau_map;      ///< combined streak strength per pixel
  Image streak_mask;  ///< 1 where any streak covers the pixel
};

/// Streak overlay on a 3-channel background. Accumulation, when enabled, is
/// applied after the streaks.
RainRender render_streaks(const Image& background, const RainParams& params);

/// I = A * airlight + (1 - A) * background.
Image render_accumulation(const Image& background, double A, double airlight);

struct RainPair {
  Image frame1;
  Image frame2;
  FlowField flow;    ///< ground truth from frame 1 to frame 2
  Image valid;       ///< 1 where frame1(x) has a counterpart in frame2
  RainRender render1;
  RainRender render2;
};

/// Same background twice with independent streak draws; ground truth is zero.
RainPair make_static_pair(const Image& background, const RainParams& params);

/// frame2(x + shift) = background(x), each frame rained on independently.
/// Throws std::invalid_argument when the overlap is smaller than 32x32.
RainPair make_translation_pair(const Image& background, double shift_x, double shift_y,
                               const RainParams& params);

/// Deterministic colourful test scene: flat coloured shapes over a smooth
/// multi-frequency texture.
Image make_background(int width, int height, std::uint64_t seed);

/// Seed for the `stream`-th independent draw derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rainflow
