#include "rainflow/imagecore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rainflow {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Interpolation cell for a clamped coordinate. At the last sample the cell
// degenerates so that integer positions reproduce samples exactly.
struct Cell {
  int i0, i1;
  double f;
};

inline Cell cell_for(double x, int n) {
  const double xc = std::clamp(x, 0.0, static_cast<double>(n - 1));
  int i0 = static_cast<int>(std::floor(xc));
  if (i0 > n - 1) i0 = n - 1;
  const int i1 = std::min(i0 + 1, n - 1);
  return {i0, i1, xc - i0};
}

inline double lerp(double a, double b, double f) { return f == 0.0 ? a : a + f * (b - a); }

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

}  // namespace

std::vector<std::pair<int, int>> pyramid_sizes(int width, int height, double scale_factor,
                                               int min_size) {
  std::vector<std::pair<int, int>> sizes{{width, height}};
  for (;;) {
    const auto [w, h] = sizes.back();
    const int nw = static_cast<int>(std::ceil(w * scale_factor - 1e-9));
    const int nh = static_cast<int>(std::ceil(h * scale_factor - 1e-9));
    if (nw < min_size || nh < min_size || (nw == w && nh == h)) break;
    sizes.emplace_back(nw, nh);
  }
  return sizes;
}

Pyramid build_pyramid(const Image& img, double scale_factor, int min_size) {
  if (!(scale_factor >= 0.5 && scale_factor <= 0.95)) {
    throw std::invalid_argument("pyramid scale_factor must lie in [0.5, 0.95]");
  }
  if (min_size < 8) throw std::invalid_argument("pyramid min_size must be at least 8");

  Pyramid pyr;
  pyr.scale_factor = scale_factor;
  const auto sizes = pyramid_sizes(img.width(), img.height(), scale_factor, min_size);
  pyr.levels.reserve(sizes.size());
  pyr.levels.push_back(img);
  const double sigma = 1.0 / std::sqrt(2.0 * scale_factor);
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    const Image blurred = gaussian_blur(pyr.levels.back(), sigma);
    pyr.levels.push_back(resize_bilinear(blurred, sizes[k].first, sizes[k].second));
  }
  return pyr;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width(), h = img.height(), ch = img.channels();

  // Accumulating deviations from the centre sample keeps flat regions exact.
  Image tmp(w, h, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        const double centre = img.at(x, y, c);
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * (img.at(clampi(x + k, 0, w - 1), y, c) - centre);
        }
        tmp.at(x, y, c) = centre + acc;
      }
    }
  }
  Image out(w, h, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        const double centre = tmp.at(x, y, c);
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * (tmp.at(x, clampi(y + k, 0, h - 1), c) - centre);
        }
        out.at(x, y, c) = centre + acc;
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw DimensionError("resize target must be at least 1x1");
  if (new_width == img.width() && new_height == img.height()) return img;
  const double sx = static_cast<double>(img.width()) / new_width;
  const double sy = static_cast<double>(img.height()) / new_height;
  const int ch = img.channels();
  Image out(new_width, new_height, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < new_height; ++y) {
    const Cell cy = cell_for((y + 0.5) * sy - 0.5, img.height());
    for (int x = 0; x < new_width; ++x) {
      const Cell cx = cell_for((x + 0.5) * sx - 0.5, img.width());
      for (int c = 0; c < ch; ++c) {
        const double top = lerp(img.at(cx.i0, cy.i0, c), img.at(cx.i1, cy.i0, c), cx.f);
        const double bot = lerp(img.at(cx.i0, cy.i1, c), img.at(cx.i1, cy.i1, c), cx.f);
        out.at(x, y, c) = lerp(top, bot, cy.f);
      }
    }
  }
  return out;
}

double sample_bilinear(const Image& img, double x, double y, int c) {
  const Cell cx = cell_for(x, img.width());
  const Cell cy = cell_for(y, img.height());
  const double top = lerp(img.at(cx.i0, cy.i0, c), img.at(cx.i1, cy.i0, c), cx.f);
  const double bot = lerp(img.at(cx.i0, cy.i1, c), img.at(cx.i1, cy.i1, c), cx.f);
  return lerp(top, bot, cy.f);
}

std::pair<double, double> sample_bilinear_gradient(const Image& img, double x, double y, int c) {
  const Cell cx = cell_for(x, img.width());
  const Cell cy = cell_for(y, img.height());
  const double a = img.at(cx.i0, cy.i0, c), b = img.at(cx.i1, cy.i0, c);
  const double d = img.at(cx.i0, cy.i1, c), e = img.at(cx.i1, cy.i1, c);
  const bool x_inside = x >= 0.0 && x <= img.width() - 1 && cx.i1 != cx.i0;
  const bool y_inside = y >= 0.0 && y <= img.height() - 1 && cy.i1 != cy.i0;
  const double gx = x_inside ? (1.0 - cy.f) * (b - a) + cy.f * (e - d) : 0.0;
  const double gy = y_inside ? (1.0 - cx.f) * (d - a) + cx.f * (e - b) : 0.0;
  return {gx, gy};
}

WarpResult warp(const Image& img, const FlowField& flow) {
  if (!flow.same_size(img)) throw DimensionError("warp: flow and image sizes differ");
  const int w = img.width(), h = img.height(), ch = img.channels();
  WarpResult res{Image(w, h, ch), Image(w, h, 1)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + flow.u(x, y);
      const double py = y + flow.v(x, y);
      const bool inside = px >= 0.0 && px <= w - 1 && py >= 0.0 && py <= h - 1;
      res.valid.at(x, y) = inside ? 1.0 : 0.0;
      const Cell cx = cell_for(px, w);
      const Cell cy = cell_for(py, h);
      for (int c = 0; c < ch; ++c) {
        const double top = lerp(img.at(cx.i0, cy.i0, c), img.at(cx.i1, cy.i0, c), cx.f);
        const double bot = lerp(img.at(cx.i0, cy.i1, c), img.at(cx.i1, cy.i1, c), cx.f);
        res.image.at(x, y, c) = lerp(top, bot, cy.f);
      }
    }
  }
  return res;
}

std::pair<Image, Image> gradient(const Image& img) {
  const int w = img.width(), h = img.height(), ch = img.channels();
  Image dx(w, h, ch), dy(w, h, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        const double s = img.at(x, y, c);
        dx.at(x, y, c) = x + 1 < w ? img.at(x + 1, y, c) - s : 0.0;
        dy.at(x, y, c) = y + 1 < h ? img.at(x, y + 1, c) - s : 0.0;
      }
    }
  }
  return {std::move(dx), std::move(dy)};
}

Image derivative_x(const Image& img) {
  const int w = img.width(), h = img.height(), ch = img.channels();
  Image out(w, h, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int m2 = clampi(x - 2, 0, w - 1), m1 = clampi(x - 1, 0, w - 1);
      const int p1 = clampi(x + 1, 0, w - 1), p2 = clampi(x + 2, 0, w - 1);
      for (int c = 0; c < ch; ++c) {
        out.at(x, y, c) = (img.at(m2, y, c) - 8.0 * img.at(m1, y, c) + 8.0 * img.at(p1, y, c) -
                           img.at(p2, y, c)) /
                          12.0;
      }
    }
  }
  return out;
}

Image derivative_y(const Image& img) {
  const int w = img.width(), h = img.height(), ch = img.channels();
  Image out(w, h, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const int m2 = clampi(y - 2, 0, h - 1), m1 = clampi(y - 1, 0, h - 1);
    const int p1 = clampi(y + 1, 0, h - 1), p2 = clampi(y + 2, 0, h - 1);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        out.at(x, y, c) = (img.at(x, m2, c) - 8.0 * img.at(x, m1, c) + 8.0 * img.at(x, p1, c) -
                           img.at(x, p2, c)) /
                          12.0;
      }
    }
  }
  return out;
}

FlowField resample_flow(const FlowField& flow, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw DimensionError("resample target must be at least 1x1");
  if (new_width == flow.width() && new_height == flow.height()) return flow;
  const int w = flow.width(), h = flow.height();
  const Image u(w, h, 1, std::vector<double>(flow.u().begin(), flow.u().end()));
  const Image v(w, h, 1, std::vector<double>(flow.v().begin(), flow.v().end()));
  const Image ru = resize_bilinear(u, new_width, new_height);
  const Image rv = resize_bilinear(v, new_width, new_height);
  const double su = static_cast<double>(new_width) / w;
  const double sv = static_cast<double>(new_height) / h;
  FlowField out(new_width, new_height);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    out.u()[i] = ru[i] * su;
    out.v()[i] = rv[i] * sv;
  }
  return out;
}

FlowField median_filter(const FlowField& flow, int radius) {
  if (radius <= 0) return flow;
  const int w = flow.width(), h = flow.height();
  const int side = 2 * radius + 1;
  FlowField out(w, h);
#pragma omp parallel
  {
    std::vector<double> bu(static_cast<std::size_t>(side) * side);
    std::vector<double> bv(bu.size());
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::size_t n = 0;
        for (int dy = -radius; dy <= radius; ++dy) {
          const int yy = clampi(y + dy, 0, h - 1);
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = clampi(x + dx, 0, w - 1);
            bu[n] = flow.u(xx, yy);
            bv[n] = flow.v(xx, yy);
            ++n;
          }
        }
        const auto mid = bu.begin() + static_cast<std::ptrdiff_t>(n / 2);
        std::nth_element(bu.begin(), mid, bu.end());
        out.u(x, y) = *mid;
        const auto midv = bv.begin() + static_cast<std::ptrdiff_t>(n / 2);
        std::nth_element(bv.begin(), midv, bv.end());
        out.v(x, y) = *midv;
      }
    }
  }
  return out;
}

}  // namespace rainflow
