#include <doctest.h>

#include <cmath>

#include "rainflow/imagecore.hpp"
#include "rainflow/pipeline.hpp"
#include "rainflow/rainsim.hpp"

using namespace rainflow;

namespace {

SolverParams quick_params() {
  SolverParams p;
  p.max_iterations = 2;
  p.flow.warp_iterations = 2;
  p.flow.gnc_levels = 2;
  return p;
}

}  // namespace

TEST_CASE("inverse of a uniform flow is its negation") {
  const FlowField f(30, 20, 2.0, -1.0);
  const InverseFlow inv = inverse_flow(f);
  for (int y = 2; y < 18; ++y) {
    for (int x = 3; x < 27; ++x) {
      CHECK(inv.flow.u(x, y) == doctest::Approx(-2.0));
      CHECK(inv.flow.v(x, y) == doctest::Approx(1.0));
    }
  }
  // columns 0 and 1 receive no splat and are hole-filled
  CHECK(inv.valid.at(0, 10) == 0.0);
  CHECK(inv.flow.u(0, 10) == doctest::Approx(-2.0));
}

TEST_CASE("layers reconstruct the rounded frames exactly") {
  const RainPair pair = make_static_pair(make_background(48, 40, 3), RainParams{});
  const PipelineResult r = estimate(pair.frame1, pair.frame2, quick_params());
  const Image I1 = snapped_to_float(pair.frame1);
  for (std::size_t i = 0; i < I1.size(); ++i) CHECK(r.J1[i] + r.L1[i] == I1[i]);
  CHECK(r.energy_trace.size() == static_cast<std::size_t>(r.iterations_run) + 1);
  CHECK(r.flow.all_finite());
}

TEST_CASE("without decomposition the pipeline is a single flow solve") {
  const RainPair pair = make_translation_pair(make_background(48, 40, 5), 1.0, 0.0, RainParams{});
  SolverParams p = quick_params();
  p.use_decomposition = false;
  const PipelineResult r = estimate(pair.frame1, pair.frame2, p);
  CHECK(r.iterations_run == 0);
  CHECK(r.flow == r.initial_flow);
  CHECK(r.J1 == snapped_to_float(pair.frame1));
  for (double s : r.L2.data()) CHECK(s == 0.0);
}

TEST_CASE("energy decreases on a rainy pair") {
  RainParams rain;
  rain.seed = 3;
  const RainPair pair = make_translation_pair(make_background(56, 48, 8), 1.0, 1.0, rain);
  const PipelineResult r = estimate(pair.frame1, pair.frame2, quick_params());
  for (std::size_t k = 1; k < r.energy_trace.size(); ++k) {
    CHECK(r.energy_trace[k].total <= r.energy_trace[k - 1].total * (1.0 + 1e-3));
  }
}

TEST_CASE("monotone check keeps the last accepted state") {
  RainParams rain;
  rain.seed = 11;
  const RainPair pair = make_translation_pair(make_background(56, 48, 9), 0.6, -0.4, rain);
  SolverParams p = quick_params();
  p.energy_tolerance = 0.0;
  p.monotone = false;
  const PipelineResult free_run = estimate(pair.frame1, pair.frame2, p);
  p.monotone = true;
  const PipelineResult r = estimate(pair.frame1, pair.frame2, p);
  for (std::size_t k = 1; k < r.energy_trace.size(); ++k) {
    CHECK(r.energy_trace[k].total <= r.energy_trace[k - 1].total);
  }
  // both runs follow the same path up to the first rejected step
  const int same = r.iterations_run;
  REQUIRE(free_run.energy_trace.size() > static_cast<std::size_t>(same));
  for (int k = 0; k <= same; ++k) CHECK(free_run.energy_trace[k].total == r.energy_trace[k].total);
  if (r.rejected_iteration != 0) {
    CHECK(r.rejected_iteration == same + 1);
    CHECK(free_run.energy_trace[same + 1].total > r.energy_trace[same].total);
  } else {
    CHECK(r.iterations_run == p.max_iterations);
  }
}

TEST_CASE("estimate input checks") {
  const Image a(32, 32, 3), b(33, 32, 3);
  CHECK_THROWS_AS(estimate(a, b, {}), DimensionError);
  CHECK_THROWS_AS(estimate(Image(32, 32, 1), Image(32, 32, 1), {}), DimensionError);
  SolverParams p;
  p.max_iterations = -1;
  CHECK_THROWS_AS(estimate(a, a, p), std::invalid_argument);
}
