#include "rainflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cg.hpp"
#include "rainflow/imagecore.hpp"
#include "rainflow/parallel.hpp"

namespace rainflow {

std::string to_string(PenaltyKind kind) {
  return kind == PenaltyKind::quadratic ? "quadratic" : "charbonnier";
}

PenaltyKind penalty_kind_from_string(const std::string& name) {
  if (name == "quadratic") return PenaltyKind::quadratic;
  if (name == "charbonnier") return PenaltyKind::charbonnier;
  throw std::invalid_argument("unknown penalty '" + name + "' (expected quadratic or charbonnier)");
}

std::string to_string(FlowPreconditioner p) {
  return p == FlowPreconditioner::ilu ? "ilu" : "block_jacobi";
}

FlowPreconditioner flow_preconditioner_from_string(const std::string& name) {
  if (name == "ilu") return FlowPreconditioner::ilu;
  if (name == "block_jacobi") return FlowPreconditioner::block_jacobi;
  throw std::invalid_argument("unknown flow preconditioner '" + name + "' (expected ilu or block_jacobi)");
}

double PenaltyFn::value(double z) const {
  const double quad = z * z;
  if (kind == PenaltyKind::quadratic) return quad;
  const double robust = std::pow(z * z + epsilon * epsilon, exponent);
  return gnc_mix * quad + (1.0 - gnc_mix) * robust;
}

double PenaltyFn::derivative(double z) const { return weight(z) * z; }

double PenaltyFn::weight(double z) const {
  if (kind == PenaltyKind::quadratic) return 2.0;
  const double robust = 2.0 * exponent * std::pow(z * z + epsilon * epsilon, exponent - 1.0);
  return gnc_mix * 2.0 + (1.0 - gnc_mix) * robust;
}

void FlowSolveParams::validate() const {
  if (!(lambda_d >= 0.0)) throw std::invalid_argument("flow.lambda_d must be >= 0");
  if (!(lambda_s > 0.0)) throw std::invalid_argument("flow.lambda_s must be > 0");
  if (!(scale_factor >= 0.5 && scale_factor <= 0.95)) {
    throw std::invalid_argument("flow.scale_factor must lie in [0.5, 0.95]");
  }
  if (pyramid_min_size < 8) throw std::invalid_argument("flow.pyramid_min_size must be >= 8");
  if (warp_iterations < 1) throw std::invalid_argument("flow.warp_iterations must be >= 1");
  if (gnc_levels < 1) throw std::invalid_argument("flow.gnc_levels must be >= 1");
  if (gnc_pyramid_levels < 1) throw std::invalid_argument("flow.gnc_pyramid_levels must be >= 1");
  if (!(penalty_exponent > 0.0 && penalty_exponent <= 1.0)) {
    throw std::invalid_argument("flow.penalty_exponent must lie in (0, 1]");
  }
  if (!(penalty_epsilon > 0.0)) throw std::invalid_argument("flow.penalty_epsilon must be > 0");
  if (!(derivative_blend >= 0.0 && derivative_blend <= 1.0)) {
    throw std::invalid_argument("flow.derivative_blend must lie in [0, 1]");
  }
  if (!(cg_tolerance > 0.0)) throw std::invalid_argument("flow.cg_tolerance must be > 0");
  if (cg_max_iterations < 1) throw std::invalid_argument("flow.cg_max_iterations must be >= 1");
  if (median_radius < 0) throw std::invalid_argument("flow.median_radius must be >= 0");
  if (!(max_increment > 0.0)) throw std::invalid_argument("flow.max_increment must be > 0");
}

PenaltyFn FlowSolveParams::penalty_at_stage(int stage) const {
  PenaltyFn p;
  p.kind = penalty;
  p.exponent = penalty_exponent;
  p.epsilon = penalty_epsilon;
  if (penalty == PenaltyKind::quadratic) {
    p.gnc_mix = 1.0;
  } else {
    p.gnc_mix = gnc_levels > 1 ? 1.0 - static_cast<double>(stage) / (gnc_levels - 1) : 0.0;
  }
  return p;
}

namespace {

// Everything the linearisation needs at one pyramid level.
struct Level {
  Image luma1, luma2, luma1_dx, luma1_dy, luma2_dx, luma2_dy;
  Image res1, res2, res1_dx, res1_dy, res2_dx, res2_dy;
  Image weight;
  bool residue = false;

  Level(Image y1, Image y2, Image r1, Image r2, Image w)
      : luma1(std::move(y1)), luma2(std::move(y2)), res1(std::move(r1)), res2(std::move(r2)),
        weight(std::move(w)) {
    luma1_dx = derivative_x(luma1);
    luma1_dy = derivative_y(luma1);
    luma2_dx = derivative_x(luma2);
    luma2_dy = derivative_y(luma2);
    residue = !res1.empty();
    if (residue) {
      res1_dx = derivative_x(res1);
      res1_dy = derivative_y(res1);
      res2_dx = derivative_x(res2);
      res2_dy = derivative_y(res2);
    }
  }
};

Linearization linearize_level(const Level& lv, const FlowField& flow, DerivativeMode mode,
                              double blend) {
  const int w = lv.luma1.width(), h = lv.luma1.height();
  Linearization lin{Image(w, h, 1), Image(w, h, 1), Image(w, h, 1), {}, {}, {}, Image(w, h, 1)};
  if (lv.residue) {
    lin.residue_dt = Image(w, h, 1);
    lin.residue_dx = Image(w, h, 1);
    lin.residue_dy = Image(w, h, 1);
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + flow.u(x, y);
      const double py = y + flow.v(x, y);
      lin.valid.at(x, y) = (px >= 0.0 && px <= w - 1 && py >= 0.0 && py <= h - 1) ? 1.0 : 0.0;
      lin.intensity_dt.at(x, y) = sample_bilinear(lv.luma2, px, py) - lv.luma1.at(x, y);
      if (mode == DerivativeMode::exact) {
        const auto [gx, gy] = sample_bilinear_gradient(lv.luma2, px, py);
        lin.intensity_dx.at(x, y) = gx;
        lin.intensity_dy.at(x, y) = gy;
      } else {
        lin.intensity_dx.at(x, y) =
            blend * sample_bilinear(lv.luma2_dx, px, py) + (1.0 - blend) * lv.luma1_dx.at(x, y);
        lin.intensity_dy.at(x, y) =
            blend * sample_bilinear(lv.luma2_dy, px, py) + (1.0 - blend) * lv.luma1_dy.at(x, y);
      }
      if (lv.residue) {
        lin.residue_dt.at(x, y) = sample_bilinear(lv.res2, px, py) - lv.res1.at(x, y);
        if (mode == DerivativeMode::exact) {
          const auto [gx, gy] = sample_bilinear_gradient(lv.res2, px, py);
          lin.residue_dx.at(x, y) = gx;
          lin.residue_dy.at(x, y) = gy;
        } else {
          lin.residue_dx.at(x, y) =
              blend * sample_bilinear(lv.res2_dx, px, py) + (1.0 - blend) * lv.res1_dx.at(x, y);
          lin.residue_dy.at(x, y) =
              blend * sample_bilinear(lv.res2_dy, px, py) + (1.0 - blend) * lv.res1_dy.at(x, y);
        }
      }
    }
  }
  return lin;
}

bool any_nonzero(const Image& img) {
  return std::any_of(img.data().begin(), img.data().end(), [](double s) { return s != 0.0; });
}

void check_single_channel(const Image& img, const char* what) {
  if (img.channels() != 1) throw DimensionError(std::string(what) + " must be single-channel");
}

// Data terms split into intensity and residue parts.
std::pair<double, double> data_terms(const Image& luma1, const Image& luma2, const Image& residue1,
                                     const Image& residue2, const Image& weight,
                                     const FlowField& flow, double lambda_d,
                                     const PenaltyFn& penalty) {
  const int w = luma1.width(), h = luma1.height();
  const bool residue = !residue1.empty();
  const std::size_t n = luma1.pixel_count();
  auto valid_at = [&](int x, int y, double& px, double& py) {
    px = x + flow.u(x, y);
    py = y + flow.v(x, y);
    return px >= 0.0 && px <= w - 1 && py >= 0.0 && py <= h - 1;
  };
  const double intensity = deterministic_sum(n, [&](std::size_t i) {
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    double px, py;
    if (!valid_at(x, y, px, py)) return 0.0;
    const double z = sample_bilinear(luma2, px, py) - luma1[i];
    return (1.0 - weight[i]) * penalty.excess(z);
  });
  double res = 0.0;
  if (residue) {
    res = deterministic_sum(n, [&](std::size_t i) {
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      double px, py;
      if (!valid_at(x, y, px, py) || weight[i] == 0.0) return 0.0;
      const double z = sample_bilinear(residue2, px, py) - residue1[i];
      return weight[i] * penalty.excess(z);
    });
  }
  return {lambda_d * intensity, lambda_d * res};
}

constexpr double kIluRelaxation = 1.0;

struct SmoothWeights {
  std::vector<double> ux, uy, vx, vy;  // lambda_s * psi on edge to the right / below
};

SmoothWeights smoothness_weights(const FlowField& flow, double lambda_s, const PenaltyFn& pen) {
  const int w = flow.width(), h = flow.height();
  const std::size_t n = flow.pixel_count();
  SmoothWeights s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                  std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w) {
        s.ux[i] = lambda_s * pen.weight(flow.u(x + 1, y) - flow.u(x, y));
        s.vx[i] = lambda_s * pen.weight(flow.v(x + 1, y) - flow.v(x, y));
      }
      if (y + 1 < h) {
        s.uy[i] = lambda_s * pen.weight(flow.u(x, y + 1) - flow.u(x, y));
        s.vy[i] = lambda_s * pen.weight(flow.v(x, y + 1) - flow.v(x, y));
      }
    }
  }
  return s;
}

}  // namespace

Linearization linearize(const Image& luma1, const Image& luma2, const Image& residue1,
                        const Image& residue2, const FlowField& flow, DerivativeMode mode,
                        double derivative_blend) {
  check_single_channel(luma1, "linearize: luma1");
  check_single_channel(luma2, "linearize: luma2");
  require_same_size(luma1, luma2, "linearize");
  if (!flow.same_size(luma1)) throw DimensionError("linearize: flow size differs");
  if (!residue1.empty()) {
    require_same_size(luma1, residue1, "linearize");
    require_same_size(luma1, residue2, "linearize");
  }
  const Level lv(luma1, luma2, residue1, residue2, Image());
  return linearize_level(lv, flow, mode, derivative_blend);
}

double data_energy(const Image& luma1, const Image& luma2, const Image& residue1,
                   const Image& residue2, const Image& weight, const FlowField& flow,
                   double lambda_d, const PenaltyFn& penalty) {
  const auto [a, b] = data_terms(luma1, luma2, residue1, residue2, weight, flow, lambda_d, penalty);
  return a + b;
}

FlowField data_energy_gradient(const Linearization& lin, const Image& weight, double lambda_d,
                               const PenaltyFn& penalty) {
  const int w = lin.valid.width(), h = lin.valid.height();
  FlowField g(w, h);
  for (std::size_t i = 0; i < g.pixel_count(); ++i) {
    if (lin.valid[i] == 0.0) continue;
    const double wi = weight[i];
    const double di = lambda_d * (1.0 - wi) * penalty.derivative(lin.intensity_dt[i]);
    double gu = di * lin.intensity_dx[i];
    double gv = di * lin.intensity_dy[i];
    if (lin.has_residue()) {
      const double dr = lambda_d * wi * penalty.derivative(lin.residue_dt[i]);
      gu += dr * lin.residue_dx[i];
      gv += dr * lin.residue_dy[i];
    }
    g.u()[i] = gu;
    g.v()[i] = gv;
  }
  return g;
}

double smoothness_energy(const FlowField& flow, double lambda_s, const PenaltyFn& penalty) {
  const int w = flow.width(), h = flow.height();
  const double sum = deterministic_sum(flow.pixel_count(), [&](std::size_t i) {
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    double e = 0.0;
    if (x + 1 < w) {
      e += penalty.excess(flow.u(x + 1, y) - flow.u(x, y));
      e += penalty.excess(flow.v(x + 1, y) - flow.v(x, y));
    }
    if (y + 1 < h) {
      e += penalty.excess(flow.u(x, y + 1) - flow.u(x, y));
      e += penalty.excess(flow.v(x, y + 1) - flow.v(x, y));
    }
    return e;
  });
  return lambda_s * sum;
}

double linearized_energy(const Linearization& lin, const Image& weight, const FlowField& flow,
                         const FlowField& increment, const PenaltyFn& data_penalty,
                         const PenaltyFn& smooth_penalty, const FlowSolveParams& params) {
  const std::size_t n = flow.pixel_count();
  const double data = deterministic_sum(n, [&](std::size_t i) {
    if (lin.valid[i] == 0.0) return 0.0;
    const double du = increment.u()[i], dv = increment.v()[i];
    const double wi = weight[i];
    double e = (1.0 - wi) * data_penalty.excess(lin.intensity_dt[i] + lin.intensity_dx[i] * du +
                                                lin.intensity_dy[i] * dv);
    if (lin.has_residue()) {
      e += wi * data_penalty.excess(lin.residue_dt[i] + lin.residue_dx[i] * du +
                                    lin.residue_dy[i] * dv);
    }
    return e;
  });
  FlowField total(flow.width(), flow.height());
  for (std::size_t i = 0; i < n; ++i) {
    total.u()[i] = flow.u()[i] + increment.u()[i];
    total.v()[i] = flow.v()[i] + increment.v()[i];
  }
  return params.lambda_d * data + smoothness_energy(total, params.lambda_s, smooth_penalty);
}

FlowField solve_increment(const Linearization& lin, const Image& weight, const FlowField& flow,
                          const PenaltyFn& data_penalty, const PenaltyFn& smooth_penalty,
                          const FlowSolveParams& params, IncrementStats* stats) {
  const int w = flow.width(), h = flow.height();
  const std::size_t n = flow.pixel_count();
  std::vector<double> a11(n), a12(n), a22(n), rhs(2 * n);

  const SmoothWeights sw = smoothness_weights(flow, params.lambda_s, smooth_penalty);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double c11 = 0.0, c12 = 0.0, c22 = 0.0, g1 = 0.0, g2 = 0.0;
      if (lin.valid[i] != 0.0) {
        const double wi = weight[i];
        const double ix = lin.intensity_dx[i], iy = lin.intensity_dy[i], it = lin.intensity_dt[i];
        const double ai = params.lambda_d * (1.0 - wi) * data_penalty.weight(it);
        c11 += ai * ix * ix;
        c12 += ai * ix * iy;
        c22 += ai * iy * iy;
        g1 += ai * it * ix;
        g2 += ai * it * iy;
        if (lin.has_residue() && wi != 0.0) {
          const double rx = lin.residue_dx[i], ry = lin.residue_dy[i], rt = lin.residue_dt[i];
          const double ar = params.lambda_d * wi * data_penalty.weight(rt);
          c11 += ar * rx * rx;
          c12 += ar * rx * ry;
          c22 += ar * ry * ry;
          g1 += ar * rt * rx;
          g2 += ar * rt * ry;
        }
      }
      // Smoothness gradient at the current flow.
      const double ui = flow.u()[i], vi = flow.v()[i];
      double su = 0.0, sv = 0.0;
      if (x > 0) {
        su += sw.ux[i - 1] * (ui - flow.u()[i - 1]);
        sv += sw.vx[i - 1] * (vi - flow.v()[i - 1]);
      }
      if (x + 1 < w) {
        su += sw.ux[i] * (ui - flow.u()[i + 1]);
        sv += sw.vx[i] * (vi - flow.v()[i + 1]);
      }
      if (y > 0) {
        su += sw.uy[i - w] * (ui - flow.u()[i - w]);
        sv += sw.vy[i - w] * (vi - flow.v()[i - w]);
      }
      if (y + 1 < h) {
        su += sw.uy[i] * (ui - flow.u()[i + w]);
        sv += sw.vy[i] * (vi - flow.v()[i + w]);
      }
      a11[i] = c11;
      a12[i] = c12;
      a22[i] = c22;
      rhs[2 * i] = -(g1 + su);
      rhs[2 * i + 1] = -(g2 + sv);
    }
  }

  // Block-Jacobi: inverse of the 2x2 diagonal block per pixel.
  std::vector<double> p11(n), p12(n), p22(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double du = 0.0, dv = 0.0;
      if (x > 0) du += sw.ux[i - 1], dv += sw.vx[i - 1];
      if (x + 1 < w) du += sw.ux[i], dv += sw.vx[i];
      if (y > 0) du += sw.uy[i - w], dv += sw.vy[i - w];
      if (y + 1 < h) du += sw.uy[i], dv += sw.vy[i];
      const double d11 = a11[i] + du, d22 = a22[i] + dv, d12 = a12[i];
      const double det = d11 * d22 - d12 * d12;
      if (det > 0.0) {
        p11[i] = d22 / det;
        p12[i] = -d12 / det;
        p22[i] = d11 / det;
      } else {
        p11[i] = d11 > 0.0 ? 1.0 / d11 : 1.0;
        p22[i] = d22 > 0.0 ? 1.0 / d22 : 1.0;
      }
    }
  }

  auto apply = [&](std::span<const double> in, std::span<double> out) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double du = in[2 * i], dv = in[2 * i + 1];
        double lu = 0.0, lv = 0.0;
        if (x > 0) {
          lu += sw.ux[i - 1] * (du - in[2 * (i - 1)]);
          lv += sw.vx[i - 1] * (dv - in[2 * (i - 1) + 1]);
        }
        if (x + 1 < w) {
          lu += sw.ux[i] * (du - in[2 * (i + 1)]);
          lv += sw.vx[i] * (dv - in[2 * (i + 1) + 1]);
        }
        if (y > 0) {
          lu += sw.uy[i - w] * (du - in[2 * (i - w)]);
          lv += sw.vy[i - w] * (dv - in[2 * (i - w) + 1]);
        }
        if (y + 1 < h) {
          lu += sw.uy[i] * (du - in[2 * (i + w)]);
          lv += sw.vy[i] * (dv - in[2 * (i + w) + 1]);
        }
        out[2 * i] = a11[i] * du + a12[i] * dv + lu;
        out[2 * i + 1] = a12[i] * du + a22[i] * dv + lv;
      }
    }
  };
  // Block incomplete factorisation M = (D + L) D^-1 (D + L^T) over the
  // 4-neighbour pattern. L only holds the (diagonal) smoothness couplings,
  // so the 2x2 pivots D_i are the only fill-in.
  std::vector<double> q11, q12, q22;
  if (params.preconditioner == FlowPreconditioner::ilu) {
    q11.resize(n);
    q12.resize(n);
    q22.resize(n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        double d11 = a11[i], d12 = a12[i], d22 = a22[i];
        if (x > 0) d11 += sw.ux[i - 1], d22 += sw.vx[i - 1];
        if (x + 1 < w) d11 += sw.ux[i], d22 += sw.vx[i];
        if (y > 0) d11 += sw.uy[i - w], d22 += sw.vy[i - w];
        if (y + 1 < h) d11 += sw.uy[i], d22 += sw.vy[i];
        const double e11 = d11, e12 = d12, e22 = d22;
        auto eliminate = [&](std::size_t j, double su, double sv) {
          d11 -= su * su * q11[j];
          d12 -= su * sv * q12[j];
          d22 -= sv * sv * q22[j];
        };
        if (x > 0) eliminate(i - 1, sw.ux[i - 1], sw.vx[i - 1]);
        if (y > 0) eliminate(i - w, sw.uy[i - w], sw.vy[i - w]);
        // Row-sum compensation for the dropped fill-in (modified ILU).
        auto lump = [&](std::size_t j, double su, double sv, double tu, double tv) {
          d11 -= kIluRelaxation * su * tu * q11[j];
          d12 -= kIluRelaxation * 0.5 * (su * tv + sv * tu) * q12[j];
          d22 -= kIluRelaxation * sv * tv * q22[j];
        };
        if (x > 0 && y + 1 < h) lump(i - 1, sw.ux[i - 1], sw.vx[i - 1], sw.uy[i - 1], sw.vy[i - 1]);
        if (y > 0 && x + 1 < w) lump(i - w, sw.uy[i - w], sw.vy[i - w], sw.ux[i - w], sw.vx[i - w]);
        double det = d11 * d22 - d12 * d12;
        if (!(d11 > 0.0 && det > 1e-12 * e11 * e22)) {
          // Pivot lost definiteness; fall back to the unmodified block.
          d11 = e11, d12 = e12, d22 = e22;
          det = d11 * d22 - d12 * d12;
        }
        q11[i] = d22 / det;
        q12[i] = -d12 / det;
        q22[i] = d11 / det;
      }
    }
  }

  auto precondition = [&](std::span<const double> in, std::span<double> out) {
    if (params.preconditioner == FlowPreconditioner::block_jacobi) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const double r1 = in[2 * i], r2 = in[2 * i + 1];
        out[2 * i] = p11[i] * r1 + p12[i] * r2;
        out[2 * i + 1] = p12[i] * r1 + p22[i] * r2;
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int x = static_cast<int>(i % w);
      double t1 = in[2 * i], t2 = in[2 * i + 1];
      if (x > 0) t1 += sw.ux[i - 1] * out[2 * (i - 1)], t2 += sw.vx[i - 1] * out[2 * (i - 1) + 1];
      if (i >= static_cast<std::size_t>(w)) {
        t1 += sw.uy[i - w] * out[2 * (i - w)];
        t2 += sw.vy[i - w] * out[2 * (i - w) + 1];
      }
      out[2 * i] = q11[i] * t1 + q12[i] * t2;
      out[2 * i + 1] = q12[i] * t1 + q22[i] * t2;
    }
    for (std::size_t k = n; k-- > 0;) {
      const int x = static_cast<int>(k % w);
      double t1 = 0.0, t2 = 0.0;
      if (x + 1 < w) t1 += sw.ux[k] * out[2 * (k + 1)], t2 += sw.vx[k] * out[2 * (k + 1) + 1];
      if (k + w < n) t1 += sw.uy[k] * out[2 * (k + w)], t2 += sw.vy[k] * out[2 * (k + w) + 1];
      out[2 * k] += q11[k] * t1 + q12[k] * t2;
      out[2 * k + 1] += q12[k] * t1 + q22[k] * t2;
    }
  };

  std::vector<double> x(2 * n, 0.0);
  const auto res = detail::conjugate_gradient(apply, precondition, rhs, x, params.cg_tolerance,
                                              params.cg_max_iterations);
  if (stats) {
    stats->cg_iterations = res.iterations;
    stats->relative_residual = res.relative_residual;
  }
  FlowField inc(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    inc.u()[i] = x[2 * i];
    inc.v()[i] = x[2 * i + 1];
  }
  return inc;
}

FlowField solve_flow(const Image& j1, const Image& j2, const Image& residue1,
                     const Image& residue2, const Image& weight, const FlowField& init,
                     const FlowSolveParams& params) {
  params.validate();
  if (!j1.same_shape(j2)) throw DimensionError("solve_flow: layer shapes differ");
  check_single_channel(weight, "solve_flow: weight map");
  require_same_size(j1, weight, "solve_flow");
  require_finite(j1, "solve_flow: layer 1");
  require_finite(j2, "solve_flow: layer 2");
  require_finite(weight, "solve_flow: weight map");
  const bool use_residue = any_nonzero(weight);
  if (use_residue) {
    check_single_channel(residue1, "solve_flow: residue 1");
    check_single_channel(residue2, "solve_flow: residue 2");
    require_same_size(j1, residue1, "solve_flow");
    require_same_size(j1, residue2, "solve_flow");
    require_finite(residue1, "solve_flow: residue 1");
    require_finite(residue2, "solve_flow: residue 2");
  }
  if (!init.empty()) {
    if (!init.same_size(j1)) throw DimensionError("solve_flow: init flow size differs");
    if (!init.all_finite()) throw NumericalError("solve_flow: init flow is not finite");
  }

  const double sf = params.scale_factor;
  const int min_size = params.pyramid_min_size;
  const Pyramid y1 = build_pyramid(to_luminance(j1), sf, min_size);
  const Pyramid y2 = build_pyramid(to_luminance(j2), sf, min_size);
  Pyramid r1, r2, wp;
  if (use_residue) {
    r1 = build_pyramid(residue1, sf, min_size);
    r2 = build_pyramid(residue2, sf, min_size);
    wp = build_pyramid(weight, sf, min_size);
  }
  const int n_levels = static_cast<int>(y1.size());
  std::vector<Level> levels;
  levels.reserve(n_levels);
  for (int k = 0; k < n_levels; ++k) {
    const Image& lw = use_residue ? wp[k] : Image(y1[k].width(), y1[k].height(), 1);
    levels.emplace_back(y1[k], y2[k], use_residue ? r1[k] : Image(),
                        use_residue ? r2[k] : Image(), lw);
  }

  FlowField flow = init.empty()
                       ? FlowField(levels.back().luma1.width(), levels.back().luma1.height())
                       : init;
  const bool refine = params.warm_refine && !init.empty();
  for (int stage = refine ? params.gnc_levels - 1 : 0; stage < params.gnc_levels; ++stage) {
    const PenaltyFn pen = params.penalty_at_stage(stage);
    const int start = stage == 0 && !refine ? n_levels - 1 : std::min(params.gnc_pyramid_levels, n_levels) - 1;
    for (int k = start; k >= 0; --k) {
      const Level& lv = levels[k];
      const int lw = lv.luma1.width(), lh = lv.luma1.height();
      flow = resample_flow(flow, lw, lh);
      for (int it = 0; it < params.warp_iterations; ++it) {
        const Linearization lin =
            linearize_level(lv, flow, DerivativeMode::blended, params.derivative_blend);
        const FlowField inc = solve_increment(lin, lv.weight, flow, pen, pen, params);
        for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
          flow.u()[i] += std::clamp(inc.u()[i], -params.max_increment, params.max_increment);
          flow.v()[i] += std::clamp(inc.v()[i], -params.max_increment, params.max_increment);
        }
        flow = median_filter(flow, params.median_radius);
      }
    }
  }
  if (!flow.all_finite()) throw NumericalError("solve_flow: estimate became non-finite");
  return flow;
}

EnergyReport energy(const Image& j1, const Image& j2, const Image& residue1, const Image& residue2,
                    const Image& weight, const FlowField& flow, const Image& frame1,
                    const Image& frame2, const FlowSolveParams& params, const L0Params& l0) {
  if (!j1.same_shape(j2) || !j1.same_shape(frame1) || !j1.same_shape(frame2)) {
    throw DimensionError("energy: layer/frame shapes differ");
  }
  if (!flow.same_size(j1)) throw DimensionError("energy: flow size differs");
  const PenaltyFn pen = params.final_penalty();
  EnergyReport e;
  const bool use_residue = any_nonzero(weight);
  const auto [di, dr] =
      data_terms(to_luminance(j1), to_luminance(j2), use_residue ? residue1 : Image(),
                 use_residue ? residue2 : Image(), weight, flow, params.lambda_d, pen);
  e.data_intensity = di;
  e.data_residue = dr;
  e.smoothness = smoothness_energy(flow, params.lambda_s, pen);
  auto fidelity = [&](const Image& frame, const Image& layer) {
    return l0.alpha * deterministic_sum(frame.size(), [&](std::size_t i) {
             const double d = frame[i] - layer[i];
             return d * d;
           });
  };
  e.fidelity1 = fidelity(frame1, j1);
  e.fidelity2 = fidelity(frame2, j2);
  e.l0_1 = l0.beta * static_cast<double>(count_edges(j1));
  e.l0_2 = l0.beta * static_cast<double>(count_edges(j2));
  e.total = e.data_intensity + e.data_residue + e.smoothness + e.fidelity1 + e.fidelity2 + e.l0_1 +
            e.l0_2;
  return e;
}

}  // namespace rainflow
