#include "rainflow/pipeline.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "rainflow/imagecore.hpp"

namespace rainflow {

std::string to_string(LayerUpdate u) {
  switch (u) {
    case LayerUpdate::jacobi: return "jacobi";
    case LayerUpdate::gauss_seidel: return "gauss_seidel";
    case LayerUpdate::midpoint: return "midpoint";
  }
  return "unknown";
}

LayerUpdate layer_update_from_string(const std::string& name) {
  for (LayerUpdate u : {LayerUpdate::jacobi, LayerUpdate::gauss_seidel, LayerUpdate::midpoint}) {
    if (to_string(u) == name) return u;
  }
  throw std::invalid_argument("unknown layer update '" + name + "' (expected jacobi, gauss_seidel or midpoint)");
}

void SolverParams::validate() const {
  flow.validate();
  l0.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("pipeline.gamma must be > 0");
  if (max_iterations < 0) throw std::invalid_argument("pipeline.max_iterations must be >= 0");
  if (!(energy_tolerance >= 0.0)) {
    throw std::invalid_argument("pipeline.energy_tolerance must be >= 0");
  }
}

InverseFlow inverse_flow(const FlowField& flow) {
  if (!flow.all_finite()) throw NumericalError("inverse_flow: flow is not finite");
  const int w = flow.width(), h = flow.height();
  const std::size_t n = flow.pixel_count();
  std::vector<double> acc_u(n, 0.0), acc_v(n, 0.0), mass(n, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = flow.u(x, y), v = flow.v(x, y);
      const double tx = x + u, ty = y + v;
      const double fx = std::floor(tx), fy = std::floor(ty);
      const double ax = tx - fx, ay = ty - fy;
      const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
      const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      const int xs[4] = {ix, ix + 1, ix, ix + 1};
      const int ys[4] = {iy, iy, iy + 1, iy + 1};
      for (int k = 0; k < 4; ++k) {
        if (wts[k] <= 0.0 || xs[k] < 0 || xs[k] >= w || ys[k] < 0 || ys[k] >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ys[k]) * w + xs[k];
        acc_u[j] -= wts[k] * u;
        acc_v[j] -= wts[k] * v;
        mass[j] += wts[k];
      }
    }
  }

  InverseFlow out{FlowField(w, h), Image(w, h, 1)};
  constexpr double kMinMass = 1e-3;
  std::deque<std::size_t> frontier;
  std::vector<char> filled(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mass[i] >= kMinMass) {
      out.flow.u()[i] = acc_u[i] / mass[i];
      out.flow.v()[i] = acc_v[i] / mass[i];
      out.valid[i] = 1.0;
      filled[i] = 1;
      frontier.push_back(i);
    }
  }
  // Breadth-first fill from the splatted pixels.
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop_front();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
      const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
      if (filled[j]) continue;
      filled[j] = 1;
      out.flow.u()[j] = out.flow.u()[i];
      out.flow.v()[j] = out.flow.v()[i];
      frontier.push_back(j);
    }
  }
  return out;
}

namespace {

Image residue_or_empty(const Image& layer, bool on) { return on ? residue_channel(layer) : Image(); }

Image mask_and(const Image& a, const Image& b) {
  Image out(a.width(), a.height(), 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] != 0.0 && b[i] != 0.0) ? 1.0 : 0.0;
  return out;
}

// Per-pixel coupling weight of `layer` to `other_warped` where `valid` is set.
Image coupling_mask(const Image& layer, const Image& other_warped, const Image& valid, const Image& W,
                    const PenaltyFn& pen, bool robust) {
  Image m(layer.width(), layer.height(), 1);
  const int c = layer.channels();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (valid[i] == 0.0) continue;
    if (!robust) {
      m[i] = 1.0;
      continue;
    }
    double d2 = 0.0;
    for (int k = 0; k < c; ++k) {
      const double d = layer[i * c + k] - other_warped[i * c + k];
      d2 += d * d;
    }
    m[i] = (1.0 - W[i]) * pen.weight(std::sqrt(d2)) / 2.0;
  }
  return m;
}

// One layer refresh: couple `layer` (of `frame`) to `other_warped`.
Image update_layer(const Image& frame, const Image& layer, const Image& other_warped, const Image& valid,
                   const Image& W, const PenaltyFn& pen, const SolverParams& params) {
  Image mask = coupling_mask(layer, other_warped, valid, W, pen, params.robust_coupling);
  if (params.layer_update != LayerUpdate::midpoint) return separate_layer(frame, other_warped, mask, params.l0);
  Image target = other_warped;
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = 0.5 * (layer[i] + other_warped[i]);
  for (double& m : mask.data()) m *= 2.0;
  return separate_layer(frame, target, mask, params.l0);
}

}  // namespace

PipelineResult estimate(const Image& frame1, const Image& frame2, const SolverParams& params) {
  params.validate();
  if (frame1.channels() != 3 || frame2.channels() != 3) {
    throw DimensionError("estimate: frames must be 3-channel");
  }
  if (!frame1.same_shape(frame2)) throw DimensionError("estimate: frame sizes differ");
  require_finite(frame1, "estimate: frame 1");
  require_finite(frame2, "estimate: frame 2");

  const Image I1 = snapped_to_float(frame1);
  const Image I2 = snapped_to_float(frame2);
  const bool residue_on = params.use_residue;
  const Image W = residue_on ? weight_map(I1, params.gamma) : Image(I1.width(), I1.height(), 1);

  PipelineResult res;
  res.J1 = I1;
  res.J2 = I2;
  Image R1 = residue_or_empty(res.J1, residue_on);
  Image R2 = residue_or_empty(res.J2, residue_on);
  res.flow = solve_flow(res.J1, res.J2, R1, R2, W, FlowField(), params.flow);
  res.initial_flow = res.flow;
  res.energy_trace.push_back(energy(res.J1, res.J2, R1, R2, W, res.flow, I1, I2, params.flow, params.l0));

  if (params.use_decomposition) {
    const PenaltyFn pen = params.flow.final_penalty();
    for (int it = 1; it <= params.max_iterations; ++it) {
      const WarpResult to1 = warp(res.J2, res.flow);
      Image J1 = update_layer(I1, res.J1, to1.image, to1.valid, W, pen, params);

      const InverseFlow back = inverse_flow(res.flow);
      const bool fresh = params.layer_update == LayerUpdate::gauss_seidel;
      const WarpResult to2 = warp(fresh ? J1 : res.J1, back.flow);
      Image J2 = update_layer(I2, res.J2, to2.image, mask_and(back.valid, to2.valid), W, pen, params);

      Image nR1 = residue_or_empty(J1, residue_on);
      Image nR2 = residue_or_empty(J2, residue_on);
      FlowField flow = solve_flow(J1, J2, nR1, nR2, W, res.flow, params.flow);
      const EnergyReport e = energy(J1, J2, nR1, nR2, W, flow, I1, I2, params.flow, params.l0);
      const double prev = res.energy_trace.back().total;
      if (params.monotone && e.total > prev) {
        res.rejected_iteration = it;
        break;
      }
      res.J1 = std::move(J1);
      res.J2 = std::move(J2);
      R1 = std::move(nR1);
      R2 = std::move(nR2);
      res.flow = std::move(flow);
      res.energy_trace.push_back(e);
      res.iterations_run = it;

      const double decrease = prev > 0.0 ? (prev - e.total) / prev : 0.0;
      if (decrease < params.energy_tolerance) break;
    }
  }

  res.L1 = detail_layer(I1, res.J1);
  res.L2 = detail_layer(I2, res.J2);
  return res;
}

}  // namespace rainflow
