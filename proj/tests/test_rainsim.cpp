#include <doctest.h>

#include "rainflow/imagecore.hpp"
#include "rainflow/rainsim.hpp"

using namespace rainflow;

TEST_CASE("rendering is deterministic in the seed") {
  const Image bg = make_background(64, 40, 1);
  RainParams p;
  p.seed = 77;
  CHECK(render_streaks(bg, p).image == render_streaks(bg, p).image);
  RainParams q = p;
  q.seed = 78;
  CHECK(!(render_streaks(bg, q).image == render_streaks(bg, p).image));
  CHECK(make_background(30, 20, 5) == make_background(30, 20, 5));
}

TEST_CASE("zero strength leaves the background untouched") {
  const Image bg = make_background(50, 30, 2);
  RainParams p;
  p.tau_max = 0.0;
  const RainRender r = render_streaks(bg, p);
  CHECK(r.image == bg);
  for (double t : r.tau_map.data()) CHECK(t == 0.0);
}

TEST_CASE("streaks follow the compositing model") {
  const Image bg = make_background(60, 40, 3);
  RainParams p;
  p.streak_density = 6000;
  const RainRender r = render_streaks(bg, p);
  int covered = 0;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 60; ++x) {
      const double tau = r.tau_map.at(x, y);
      CHECK(tau >= 0.0);
      CHECK(tau < 1.0);
      if (tau > 0.0) ++covered;
      for (int c = 0; c < 3; ++c) {
        const double expect = (1.0 - tau) * bg.at(x, y, c) + tau * p.rain_radiance;
        CHECK(r.image.at(x, y, c) == doctest::Approx(expect).epsilon(1e-6));
      }
    }
  }
  CHECK(covered > 0);
}

TEST_CASE("accumulation is an affine veil") {
  const Image bg(4, 4, 3, 0.2);
  const Image v = render_accumulation(bg, 0.25, 0.8);
  for (double s : v.data()) CHECK(s == doctest::Approx(0.25 * 0.8 + 0.75 * 0.2));
  CHECK(render_accumulation(bg, 0.0, 0.8) == bg);
  CHECK_THROWS_AS(render_accumulation(bg, 1.0, 0.8), std::invalid_argument);
}

TEST_CASE("translation pairs carry consistent ground truth") {
  const Image bg = make_background(80, 60, 4);
  RainParams p;
  p.tau_max = 0.0;
  const RainPair pair = make_translation_pair(bg, 3.0, -2.0, p);
  CHECK(pair.flow.u(10, 10) == 3.0);
  CHECK(pair.flow.v(10, 10) == -2.0);
  CHECK(pair.valid.at(79, 30) == 0.0);
  CHECK(pair.valid.at(5, 0) == 0.0);
  CHECK(pair.valid.at(40, 30) == 1.0);
  // frame2(x + shift) == frame1(x)
  for (int y = 5; y < 50; ++y)
    for (int x = 5; x < 70; ++x)
      for (int c = 0; c < 3; ++c) CHECK(pair.frame2.at(x + 3, y - 2, c) == doctest::Approx(pair.frame1.at(x, y, c)).epsilon(1e-6));
  CHECK_THROWS_AS(make_translation_pair(bg, 60.0, 0.0, p), std::invalid_argument);
}

TEST_CASE("static pairs draw independent streaks") {
  const Image bg = make_background(64, 48, 6);
  const RainPair pair = make_static_pair(bg, RainParams{});
  CHECK(!(pair.frame1 == pair.frame2));
  CHECK(pair.flow.max_magnitude() == 0.0);
}

TEST_CASE("parameter validation") {
  RainParams p;
  p.tau_max = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.accumulation = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.length_jitter = 30;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(render_streaks(Image(4, 4, 1), RainParams{}), DimensionError);
}
