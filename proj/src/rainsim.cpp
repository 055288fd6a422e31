#include "rainflow/rainsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "rainflow/imagecore.hpp"

namespace rainflow {

void RainParams::validate() const {
  if (!(tau_min >= 0.0 && tau_max <= 1.0 && tau_min <= tau_max)) {
    throw std::invalid_argument("rain.tau range must satisfy 0 <= tau_min <= tau_max <= 1");
  }
  if (!(angle_min_deg <= angle_max_deg)) {
    throw std::invalid_argument("rain.angle_min_deg must be <= rain.angle_max_deg");
  }
  if (!(streak_density >= 0.0)) throw std::invalid_argument("rain.streak_density must be >= 0");
  if (!(streak_length > 0.0)) throw std::invalid_argument("rain.streak_length must be > 0");
  if (!(length_jitter >= 0.0 && length_jitter < streak_length)) {
    throw std::invalid_argument("rain.length_jitter must lie in [0, streak_length)");
  }
  if (!(streak_width > 0.0)) throw std::invalid_argument("rain.streak_width must be > 0");
  if (!(rain_radiance >= 0.0 && rain_radiance <= 1.0)) {
    throw std::invalid_argument("rain.rain_radiance must lie in [0, 1]");
  }
  if (!(accumulation >= 0.0 && accumulation < 1.0)) {
    throw std::invalid_argument("rain.accumulation must lie in [0, 1)");
  }
  if (!(airlight >= 0.0 && airlight <= 1.0)) {
    throw std::invalid_argument("rain.airlight must lie in [0, 1]");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over the combined state
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = ax + t * dx - px, qy = ay + t * dy - py;
  return std::sqrt(qx * qx + qy * qy);
}

// Hue in [0, 6).
void hsv_to_rgb(double hue, double sat, double val, double rgb[3]) {
  const double c = val * sat;
  const double x = c * (1.0 - std::abs(std::fmod(hue, 2.0) - 1.0));
  const double m = val - c;
  const int sector = std::min(5, static_cast<int>(hue));
  const double table[6][3] = {{c, x, 0}, {x, c, 0}, {0, c, x}, {0, x, c}, {x, 0, c}, {c, 0, x}};
  for (int k = 0; k < 3; ++k) rgb[k] = table[sector][k] + m;
}

}  // namespace

RainRender render_streaks(const Image& background, const RainParams& params) {
  params.validate();
  if (background.channels() != 3) throw DimensionError("render_streaks: background must be RGB");
  require_finite(background, "render_streaks");
  const int w = background.width(), h = background.height();

  // Product of (1 - tau_k * coverage_k) over the streaks touching each pixel.
  Image clear(w, h, 1, 1.0);
  const double area = static_cast<double>(w) * h;
  const auto count = static_cast<long>(std::llround(params.streak_density * area / 1e6));

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const double reach = params.streak_width / 2.0 + 0.5;
  for (long k = 0; k < count; ++k) {
    const double cx = uniform(-0.5, w - 0.5);
    const double cy = uniform(-0.5, h - 0.5);
    const double theta = uniform(params.angle_min_deg, params.angle_max_deg) * std::numbers::pi / 180.0;
    const double len = params.streak_length + uniform(-params.length_jitter, params.length_jitter);
    const double tau = uniform(params.tau_min, params.tau_max);
    if (tau == 0.0) continue;
    const double hx = 0.5 * len * std::sin(theta), hy = 0.5 * len * std::cos(theta);
    const double ax = cx - hx, ay = cy - hy, bx = cx + hx, by = cy + hy;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - reach)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(ax, bx) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - reach)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(ay, by) + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double cover = std::clamp(reach - segment_distance(x, y, ax, ay, bx, by), 0.0, 1.0);
        if (cover > 0.0) clear.at(x, y) *= 1.0 - tau * cover;
      }
    }
  }

  RainRender out{Image(w, h, 3), Image(w, h, 1), Image(w, h, 1)};
  const double A = params.accumulation;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tau = 1.0 - clear.at(x, y);
      out.tau_map.at(x, y) = tau;
      out.streak_mask.at(x, y) = tau > 0.0 ? 1.0 : 0.0;
      for (int c = 0; c < 3; ++c) {
        double v = tau > 0.0 ? (1.0 - tau) * background.at(x, y, c) + tau * params.rain_radiance
                             : background.at(x, y, c);
        if (A > 0.0) v = A * params.airlight + (1.0 - A) * v;
        out.image.at(x, y, c) = v;
      }
    }
  }
  snap_to_float(out.image);
  return out;
}

Image render_accumulation(const Image& background, double A, double airlight) {
  if (!(A >= 0.0 && A < 1.0)) throw std::invalid_argument("render_accumulation: A must lie in [0, 1)");
  if (!(airlight >= 0.0 && airlight <= 1.0)) {
    throw std::invalid_argument("render_accumulation: airlight must lie in [0, 1]");
  }
  if (A == 0.0) return background;
  Image out = background;
  for (double& s : out.data()) s = A * airlight + (1.0 - A) * s;
  return out;
}

RainPair make_static_pair(const Image& background, const RainParams& params) {
  return make_translation_pair(background, 0.0, 0.0, params);
}

RainPair make_translation_pair(const Image& background, double shift_x, double shift_y,
                               const RainParams& params) {
  params.validate();
  if (background.channels() != 3) throw DimensionError("make_translation_pair: background must be RGB");
  const int w = background.width(), h = background.height();
  if (!(std::isfinite(shift_x) && std::isfinite(shift_y)) || w - std::abs(shift_x) < 32.0 ||
      h - std::abs(shift_y) < 32.0) {
    throw std::invalid_argument("make_translation_pair: shift leaves less than 32x32 of overlap");
  }
  const Image base = snapped_to_float(background);
  Image moved = base;
  if (shift_x != 0.0 || shift_y != 0.0) {
    moved = snapped_to_float(warp(base, FlowField(w, h, -shift_x, -shift_y)).image);
  }

  RainParams p1 = params, p2 = params;
  p1.seed = derive_seed(params.seed, 1);
  p2.seed = derive_seed(params.seed, 2);

  RainPair pair;
  pair.render1 = render_streaks(base, p1);
  pair.render2 = render_streaks(moved, p2);
  pair.frame1 = pair.render1.image;
  pair.frame2 = pair.render2.image;
  pair.flow = FlowField(w, h, shift_x, shift_y);
  pair.valid = Image(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tx = x + shift_x, ty = y + shift_y;
      pair.valid.at(x, y) = (tx >= 0.0 && tx <= w - 1 && ty >= 0.0 && ty <= h - 1) ? 1.0 : 0.0;
    }
  }
  return pair;
}

Image make_background(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) throw DimensionError("make_background: empty size");
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  struct Wave {
    double fx, fy, phase, amp[3];
  };
  std::vector<Wave> waves(14);
  for (Wave& wv : waves) {
    const double freq = uniform(0.015, 0.25);  // cycles per pixel
    const double dir = uniform(0.0, std::numbers::pi);
    wv.fx = 2.0 * std::numbers::pi * freq * std::cos(dir);
    wv.fy = 2.0 * std::numbers::pi * freq * std::sin(dir);
    wv.phase = uniform(0.0, 2.0 * std::numbers::pi);
    for (double& a : wv.amp) a = uniform(-0.06, 0.06);
  }

  struct Blob {
    double cx, cy, rx, ry, rot, colour[3];
    bool rect;
  };
  std::vector<Blob> blobs(12);
  const double scale = std::min(width, height);
  for (Blob& b : blobs) {
    b.cx = uniform(0.0, width);
    b.cy = uniform(0.0, height);
    b.rx = uniform(0.08, 0.3) * scale;
    b.ry = uniform(0.08, 0.3) * scale;
    b.rot = uniform(0.0, std::numbers::pi);
    hsv_to_rgb(uniform(0.0, 6.0), uniform(0.3, 0.7), uniform(0.25, 0.7), b.colour);
    b.rect = unit(rng) < 0.5;
  }
  double ground[3];
  hsv_to_rgb(uniform(0.0, 6.0), uniform(0.1, 0.4), uniform(0.3, 0.6), ground);

  Image img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double rgb[3] = {ground[0], ground[1], ground[2]};
      for (const Blob& b : blobs) {
        const double dx = x - b.cx, dy = y - b.cy;
        const double c = std::cos(b.rot), s = std::sin(b.rot);
        const double lx = (c * dx + s * dy) / b.rx, ly = (-s * dx + c * dy) / b.ry;
        const bool inside = b.rect ? (std::abs(lx) <= 1.0 && std::abs(ly) <= 1.0)
                                   : (lx * lx + ly * ly <= 1.0);
        if (inside) std::copy(b.colour, b.colour + 3, rgb);
      }
      for (const Wave& wv : waves) {
        const double t = std::sin(wv.fx * x + wv.fy * y + wv.phase);
        for (int c = 0; c < 3; ++c) rgb[c] += wv.amp[c] * t;
      }
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::clamp(rgb[c], 0.0, 1.0);
    }
  }
  snap_to_float(img);
  return img;
}

}  // namespace rainflow
