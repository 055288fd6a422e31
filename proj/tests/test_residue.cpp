#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rainflow/rainsim.hpp"
#include "rainflow/residue.hpp"

using namespace rainflow;

TEST_CASE("residue is max minus min per pixel") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image img(8, 6, 3);
  for (double& s : img.data()) s = d(rng);
  const Image r = residue_channel(img);
  const auto ref = oracle::spread({img.data().begin(), img.data().end()});
  REQUIRE(r.channels() == 1);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(r[i] == doctest::Approx(ref[i]).epsilon(1e-15));
}

TEST_CASE("residue rejects non-RGB input") {
  CHECK_THROWS_AS(residue_channel(Image(4, 4, 1)), DimensionError);
}

TEST_CASE("residue of an achromatic overlay scales by one minus tau") {
  const Image bg = make_background(64, 48, 9);
  RainParams p;
  p.streak_density = 8000;
  p.seed = 4;
  const RainRender r = render_streaks(bg, p);
  const Image rc = residue_channel(bg), rr = residue_channel(r.image);
  double worst = 0.0;
  for (std::size_t i = 0; i < rc.size(); ++i) {
    worst = std::max(worst, std::abs(rr[i] - (1.0 - r.tau_map[i]) * rc[i]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("weight map is zero on gray, saturates on strong colour") {
  Image img(2, 1, 3, std::vector<double>{0.4, 0.4, 0.4, 1.0, 0.0, 0.0});
  const Image w = weight_map(img, 2.0);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);
  Image mild(1, 1, 3, std::vector<double>{0.5, 0.45, 0.45});
  const double expect = 2.0 * std::sqrt(0.05 * 0.05 + 0.0 + 0.05 * 0.05);
  CHECK(weight_map(mild, 2.0)[0] == doctest::Approx(expect));
}

TEST_CASE("display normalisation stretches to the unit range") {
  Image m(3, 1, 1, std::vector<double>{0.2, 0.4, 0.6});
  const Image n = normalize_for_display(m);
  CHECK(n[0] == doctest::Approx(0.0));
  CHECK(n[1] == doctest::Approx(0.5));
  CHECK(n[2] == doctest::Approx(1.0));
}
