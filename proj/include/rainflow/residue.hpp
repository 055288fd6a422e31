#pragma once

#include "rainflow/image.hpp"

namespace rainflow {

/// Single-channel max-minus-min colour spread. Achromatic rain adds the same
/// radiance to all three channels, so the spread only shrinks by (1 - tau)
/// under a streak instead of picking up the streak itself.
using ResidueMap = Image;

/// Single-channel gate in [0, 1] between the intensity and residue data terms.
using WeightMap = Image;

inline constexpr double kDefaultResidueGamma = 2.0;

/// Throws DimensionError for anything but a 3-channel image.
ResidueMap residue_channel(const Image& img);

/// w = gamma * sqrt((R-G)^2 + (G-B)^2 + (B-R)^2), clamped to [0, 1].
WeightMap weight_map(const Image& img, double gamma = kDefaultResidueGamma);

/// Linear stretch of a single-channel map to [0, 1] for display.
Image normalize_for_display(const Image& map);

}  // namespace rainflow
