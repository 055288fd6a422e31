#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "rainflow/flowio.hpp"
#include "rainflow/rainsim.hpp"

using namespace rainflow;

namespace {

Image quantised(int w, int h, int c, int maxval, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, maxval);
  Image img(w, h, c);
  for (double& s : img.data()) s = static_cast<double>(static_cast<float>(d(rng)) / static_cast<float>(maxval));
  return img;
}

FlowField random_flow(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-40.0f, 40.0f);
  FlowField f(w, h);
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    f.u()[i] = d(rng);
    f.v()[i] = d(rng);
  }
  return f;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rainflow_test_" + name);
}

}  // namespace

TEST_CASE(".flo round trip is bit exact") {
  FlowField f = random_flow(13, 7, 1);
  f.u()[5] = 1e10f;  // unknown marker survives too
  const auto bytes = encode_flo(f);
  CHECK(bytes.size() == 12 + 13 * 7 * 8);
  CHECK(std::memcmp(bytes.data(), "PIEH", 4) == 0);
  CHECK(decode_flo(bytes) == f);
  CHECK(encode_flo(decode_flo(bytes)) == bytes);
  const auto path = temp_path("rt.flo");
  write_flo(f, path.string());
  CHECK(read_flo(path.string()) == f);
  std::filesystem::remove(path);
}

TEST_CASE("PNG round trips are bit exact at 8 and 16 bits") {
  for (int c : {1, 3}) {
    const Image a = quantised(11, 9, c, 255, 2 + c);
    const auto png8 = encode_png(a, 8);
    CHECK(decode_image(png8) == a);
    CHECK(encode_png(decode_image(png8), 8) == png8);
    const Image b = quantised(11, 9, c, 65535, 7 + c);
    CHECK(decode_image(encode_png(b, 16)) == b);
  }
}

TEST_CASE("PNM round trips") {
  const Image a = quantised(6, 5, 3, 255, 3);
  CHECK(decode_image(encode_pnm(a, 8)) == a);
  const Image g = quantised(6, 5, 1, 65535, 4);
  CHECK(decode_image(encode_pnm(g, 16)) == g);
}

TEST_CASE("write_image picks the format from the extension") {
  const Image a = quantised(4, 4, 3, 255, 5);
  const auto p = temp_path("img.ppm");
  write_image(a, p.string());
  CHECK(read_image(p.string()) == a);
  std::filesystem::remove(p);
  CHECK_THROWS_AS(write_image(a, temp_path("img.bmp").string()), IoError);
}

TEST_CASE("malformed .flo inputs give typed errors") {
  const auto good = encode_flo(random_flow(4, 3, 9));
  auto kind_of = [](std::vector<std::uint8_t> b) {
    try {
      decode_flo(b);
    } catch (const IoError& e) {
      return e.kind();
    }
    FAIL("decode succeeded");
    return IoErrorKind::open_failed;
  };
  auto bad = good;
  bad[0] = 'X';
  CHECK(kind_of(bad) == IoErrorKind::bad_magic);
  CHECK(kind_of({good.begin(), good.begin() + 8}) == IoErrorKind::truncated);
  CHECK(kind_of({good.begin(), good.end() - 4}) == IoErrorKind::truncated);
  bad = good;
  bad.push_back(0);
  CHECK(kind_of(bad) == IoErrorKind::size_mismatch);
  bad = good;
  bad[4] = 0xff; bad[5] = 0xff; bad[6] = 0xff; bad[7] = 0xff;  // width -1
  CHECK(kind_of(bad) == IoErrorKind::bad_header);
  bad = good;
  const float nan = std::nanf("");
  std::memcpy(bad.data() + 12, &nan, 4);
  CHECK(kind_of(bad) == IoErrorKind::invalid_value);
}

TEST_CASE("missing files raise open_failed") {
  try {
    read_image("/nonexistent/rainflow.png");
    FAIL("no throw");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoErrorKind::open_failed);
  }
  CHECK_THROWS_AS(read_flo("/nonexistent/x.flo"), IoError);
}

TEST_CASE("unknown mask and colour coding") {
  FlowField f(3, 1);
  f.u(0, 0) = 1.0;
  f.u(1, 0) = 2e9;
  const Image m = known_mask(f);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 0.0);
  const Image c = flow_to_color(f);
  REQUIRE(c.channels() == 3);
  for (int k = 0; k < 3; ++k) CHECK(c.at(1, 0, k) == 0.0);    // unknown is black
  for (int k = 0; k < 3; ++k) CHECK(c.at(2, 0, k) == doctest::Approx(1.0));  // zero is white
}
