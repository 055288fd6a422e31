#include "rainflow/residue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rainflow {

ResidueMap residue_channel(const Image& img) {
  if (img.channels() != 3) {
    throw DimensionError("residue channel needs a 3-channel colour image");
  }
  ResidueMap out(img.width(), img.height(), 1);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
    dst[i] = std::max({r, g, b}) - std::min({r, g, b});
  }
  return out;
}

WeightMap weight_map(const Image& img, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("weight_map: gamma must be positive");
  if (img.channels() != 3) throw DimensionError("weight map needs a 3-channel colour image");
  WeightMap out(img.width(), img.height(), 1);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
    const double spread = std::sqrt((r - g) * (r - g) + (g - b) * (g - b) + (b - r) * (b - r));
    dst[i] = std::clamp(gamma * spread, 0.0, 1.0);
  }
  return out;
}

Image normalize_for_display(const Image& map) {
  const auto [lo, hi] = std::minmax_element(map.data().begin(), map.data().end());
  Image out(map.width(), map.height(), map.channels());
  const double span = *hi - *lo;
  if (span <= 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (map[i] - *lo) / span;
  return out;
}

}  // namespace rainflow
