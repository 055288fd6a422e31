#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rainflow/flow.hpp"
#include "rainflow/imagecore.hpp"
#include "rainflow/rainsim.hpp"
#include "rainflow/residue.hpp"

using namespace rainflow;

namespace {

Image smooth_texture(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image img(w, h, 1);
  for (double& s : img.data()) s = d(rng);
  return gaussian_blur(img, 1.5);
}

double mean_epe(const FlowField& f, double u, double v, int border) {
  double s = 0.0;
  int n = 0;
  for (int y = border; y < f.height() - border; ++y) {
    for (int x = border; x < f.width() - border; ++x) {
      s += std::hypot(f.u(x, y) - u, f.v(x, y) - v);
      ++n;
    }
  }
  return s / n;
}

}  // namespace

TEST_CASE("penalty values and derivatives agree with the definition") {
  PenaltyFn p;
  p.exponent = 0.45;
  p.epsilon = 0.001;
  for (double mix : {0.0, 0.5, 1.0}) {
    p.gnc_mix = mix;
    for (double z : {-0.3, -1e-4, 0.0, 0.02, 0.7}) {
      CHECK(p.value(z) == doctest::Approx(oracle::charbonnier(z, 0.45, 0.001, mix)));
      const double h = 1e-7;
      const double fd = (oracle::charbonnier(z + h, 0.45, 0.001, mix) -
                         oracle::charbonnier(z - h, 0.45, 0.001, mix)) / (2 * h);
      CHECK(p.derivative(z) == doctest::Approx(fd).epsilon(1e-5));
      if (z != 0.0) CHECK(p.weight(z) == doctest::Approx(p.derivative(z) / z));
    }
    CHECK(std::isfinite(p.weight(0.0)));
    CHECK(p.excess(0.0) == 0.0);
  }
}

TEST_CASE("IRLS bound majorises the penalty") {
  PenaltyFn p;
  for (double z0 : {0.0, 0.01, 0.2}) {
    for (double z : {-0.5, 0.0, 0.003, 0.1, 1.0}) {
      CHECK(p.value(z0) + p.weight(z0) / 2 * (z * z - z0 * z0) >= p.value(z) - 1e-12);
    }
  }
}

TEST_CASE("GNC schedule goes from quadratic to robust") {
  FlowSolveParams params;
  CHECK(params.penalty_at_stage(0).gnc_mix == 1.0);
  CHECK(params.penalty_at_stage(params.gnc_levels - 1).gnc_mix == 0.0);
  CHECK(params.final_penalty().gnc_mix == 0.0);
}

TEST_CASE("data gradient matches central differences of the data energy") {
  for (unsigned inst = 0; inst < 2; ++inst) {
    const int w = 24, h = 20;
    const Image y1 = smooth_texture(w, h, 10 + inst), y2 = smooth_texture(w, h, 20 + inst);
    const Image r1 = smooth_texture(w, h, 30 + inst), r2 = smooth_texture(w, h, 40 + inst);
    Image weight = smooth_texture(w, h, 50 + inst);
    std::mt19937 rng(inst);
    std::uniform_real_distribution<double> frac(0.2, 0.8);
    FlowField flow(w, h);
    for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
      flow.u()[i] = frac(rng) + (i % 3 == 0 ? 1.0 : 0.0);
      flow.v()[i] = -frac(rng);
    }
    PenaltyFn pen;
    pen.gnc_mix = 0.3;
    const Linearization lin = linearize(y1, y2, r1, r2, flow, DerivativeMode::exact);
    const FlowField g = data_energy_gradient(lin, weight, 1.3, pen);
    for (int y = 3; y < h - 3; y += 4) {
      for (int x = 3; x < w - 3; x += 5) {
        for (int comp = 0; comp < 2; ++comp) {
          const double step = 1e-6;
          FlowField a = flow, b = flow;
          (comp == 0 ? a.u(x, y) : a.v(x, y)) += step;
          (comp == 0 ? b.u(x, y) : b.v(x, y)) -= step;
          const double fd = (data_energy(y1, y2, r1, r2, weight, a, 1.3, pen) -
                             data_energy(y1, y2, r1, r2, weight, b, 1.3, pen)) / (2 * step);
          const double an = comp == 0 ? g.u(x, y) : g.v(x, y);
          CHECK(std::abs(an - fd) <= 1e-4 * std::max(std::abs(fd), 1e-3));
        }
      }
    }
  }
}

TEST_CASE("identical frames give zero flow") {
  const Image img = smooth_texture(48, 40, 3);
  const FlowField f = solve_flow(img, img, Image(), Image(), Image(48, 40, 1), FlowField(), {});
  CHECK(f.max_magnitude() < 1e-9);
}

TEST_CASE("subpixel translation is recovered") {
  const Image base = to_luminance(make_background(96, 80, 4));
  const Image moved = warp(base, FlowField(96, 80, -1.5, -0.5)).image;
  const FlowField f = solve_flow(base, moved, Image(), Image(), Image(96, 80, 1), FlowField(), {});
  CHECK(mean_epe(f, 1.5, 0.5, 10) < 0.1);
}

TEST_CASE("ILU and block-Jacobi reach the same increment") {
  const int w = 32, h = 24;
  const Image y1 = smooth_texture(w, h, 7), y2 = smooth_texture(w, h, 8);
  const Image weight(w, h, 1);
  const Linearization lin = linearize(y1, y2, Image(), Image(), FlowField(w, h), DerivativeMode::blended);
  FlowSolveParams params;
  params.cg_tolerance = 1e-10;
  params.cg_max_iterations = 5000;
  IncrementStats s1, s2;
  const PenaltyFn pen = params.final_penalty();
  params.preconditioner = FlowPreconditioner::ilu;
  const FlowField a = solve_increment(lin, weight, FlowField(w, h), pen, pen, params, &s1);
  params.preconditioner = FlowPreconditioner::block_jacobi;
  const FlowField b = solve_increment(lin, weight, FlowField(w, h), pen, pen, params, &s2);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    worst = std::max({worst, std::abs(a.u()[i] - b.u()[i]), std::abs(a.v()[i] - b.v()[i])});
  }
  CHECK(worst < 1e-5);
  CHECK(s1.cg_iterations <= s2.cg_iterations);
}

TEST_CASE("increment lowers the linearised energy") {
  const int w = 32, h = 24;
  const Image y1 = smooth_texture(w, h, 17);
  const Image y2 = warp(y1, FlowField(w, h, -0.4, 0.3)).image;
  const Image weight(w, h, 1);
  const FlowSolveParams params;
  const PenaltyFn pen = params.penalty_at_stage(0);
  const FlowField flow(w, h);
  const Linearization lin = linearize(y1, y2, Image(), Image(), flow, DerivativeMode::blended);
  const FlowField du = solve_increment(lin, weight, flow, pen, pen, params);
  CHECK(linearized_energy(lin, weight, flow, du, pen, pen, params) <
        linearized_energy(lin, weight, flow, FlowField(w, h), pen, pen, params));
}

TEST_CASE("energy report of identical layers at zero flow is the edge term only") {
  const Image img = make_background(30, 20, 12);
  const Image R = residue_channel(img);
  const Image W = weight_map(img);
  L0Params l0;
  const EnergyReport e = energy(img, img, R, R, W, FlowField(30, 20), img, img, {}, l0);
  CHECK(e.data_intensity == 0.0);
  CHECK(e.data_residue == 0.0);
  CHECK(e.smoothness == 0.0);
  CHECK(e.fidelity1 == 0.0);
  CHECK(e.l0_1 == doctest::Approx(l0.beta * static_cast<double>(count_edges(img))));
  CHECK(e.total == doctest::Approx(e.l0_1 + e.l0_2));
}

TEST_CASE("solver input checks") {
  const Image a(20, 20, 1), b(21, 20, 1);
  CHECK_THROWS_AS(solve_flow(a, b, Image(), Image(), Image(20, 20, 1), FlowField(), {}), DimensionError);
  Image nan = a;
  nan[3] = std::nan("");
  CHECK_THROWS_AS(solve_flow(nan, a, Image(), Image(), Image(20, 20, 1), FlowField(), {}), NumericalError);
  FlowSolveParams p;
  p.scale_factor = 0.3;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
