// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. `acceptance AC3 AC5` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "rainflow/bench.hpp"
#include "rainflow/decompose.hpp"
#include "rainflow/flow.hpp"
#include "rainflow/flowio.hpp"
#include "rainflow/imagecore.hpp"
#include "rainflow/parallel.hpp"
#include "rainflow/pipeline.hpp"
#include "rainflow/rainsim.hpp"
#include "rainflow/residue.hpp"

using namespace rainflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Full-pipeline energy traces collected by AC2 and AC4 for AC6.
std::vector<std::vector<double>> g_traces;

void record_trace(const PipelineResult& r) {
  std::vector<double> t;
  for (const EnergyReport& e : r.energy_trace) t.push_back(e.total);
  g_traces.push_back(std::move(t));
}

double avg_magnitude(const FlowField& f, const Image& valid, int border) {
  return endpoint_error(f, FlowField(f.width(), f.height()), valid, border).avg_magnitude;
}

// ---------------------------------------------------------------------------

Outcome ac1_residue_identity() {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Image bg = make_background(96 + 8 * k, 72 + 4 * k, 1000 + k);
    RainParams p;
    p.seed = 2000 + k;
    const RainRender r = render_streaks(bg, p);
    const Image clean = residue_channel(bg), rained = residue_channel(r.image);
    for (std::size_t i = 0; i < clean.size(); ++i) {
      worst = std::max(worst, std::abs(rained[i] - (1.0 - r.tau_map[i]) * clean[i]));
    }
  }
  return {worst < 1e-6, fmt("max |R(rain) - (1-tau) R(clean)| = %.3g over 20 backgrounds (limit 1e-6)", worst)};
}

Outcome ac2_static_zero_flow() {
  const SolverParams params;
  double worst_full = 0.0, worst_ratio = 0.0, slowest = 0.0;
  bool ok = true;
  for (int k = 0; k < 10; ++k) {
    RainParams rain;
    rain.seed = 3000 + k;
    const RainPair pair = make_static_pair(make_background(512, 384, 300 + k), rain);
    const auto t0 = Clock::now();
    const PipelineResult full = estimate(pair.frame1, pair.frame2, params);
    slowest = std::max(slowest, seconds_since(t0));
    record_trace(full);
    const PipelineResult plain = estimate(pair.frame1, pair.frame2, with_method(params, Method::plain));
    const double mf = avg_magnitude(full.flow, Image(), 0);
    const double mp = avg_magnitude(plain.flow, Image(), 0);
    const double ratio = mp > 0.0 ? mf / mp : (mf == 0.0 ? 0.0 : INFINITY);
    std::printf("    static pair %d: full %.5f px, plain %.5f px, ratio %.3f, %d iterations\n", k, mf, mp,
                ratio, full.iterations_run);
    std::fflush(stdout);
    worst_full = std::max(worst_full, mf);
    worst_ratio = std::max(worst_ratio, ratio);
    ok = ok && mf <= 0.05 && ratio <= 0.2;
  }
  ok = ok && slowest <= 120.0;
  return {ok, fmt("worst full avg flow %.5f px (limit 0.05), worst full/plain %.3f (limit 0.2), "
                  "slowest full run %.1f s (limit 120)",
                  worst_full, worst_ratio, slowest)};
}

Outcome ac3_clean_translation() {
  RainParams clear;
  clear.tau_max = 0.0;
  const RainPair pair = make_translation_pair(make_background(128, 128, 42), 2.0, 0.0, clear);
  const PipelineResult r = estimate(pair.frame1, pair.frame2, SolverParams{});
  const double epe = endpoint_error(r.flow, pair.flow, pair.valid, kDefaultBorder).avg_epe;
  return {epe <= 0.1, fmt("interior avg EPE %.4f px for a 2 px shift (limit 0.1)", epe)};
}

Outcome ac4_rain_ablation() {
  const SolverParams params;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  const std::vector<Method> methods = all_methods();
  std::vector<double> sum(methods.size(), 0.0);
  const int pairs = 5;
  for (int k = 0; k < pairs; ++k) {
    RainParams rain;
    rain.seed = 4000 + k;
    const double dx = shift(rng), dy = shift(rng);
    const RainPair pair = make_translation_pair(make_background(256, 192, 400 + k), dx, dy, rain);
    std::printf("    pair %d shift (%.2f, %.2f):", k, dx, dy);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const PipelineResult r = estimate(pair.frame1, pair.frame2, with_method(params, methods[m]));
      if (methods[m] == Method::full) record_trace(r);
      const double epe = endpoint_error(r.flow, pair.flow, pair.valid, kDefaultBorder).avg_epe;
      sum[m] += epe;
      std::printf(" %s %.4f", to_string(methods[m]).c_str(), epe);
      std::fflush(stdout);
    }
    std::printf("\n");
  }
  const double full = sum[0] / pairs, nores = sum[1] / pairs, nodec = sum[2] / pairs, plain = sum[3] / pairs;
  const double elapsed = seconds_since(t0);
  const bool ok = full <= 0.8 * plain && full <= nores && full <= nodec && elapsed <= 900.0;
  return {ok, fmt("mean EPE full %.4f, no-residue %.4f, no-decomposition %.4f, plain %.4f; "
                  "full/plain %.3f (limit 0.8); %.0f s (limit 900)",
                  full, nores, nodec, plain, full / plain, elapsed)};
}

Outcome ac5_l0_oracle() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(3, 12);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  for (int s = 0; s < 50; ++s) {
    const int n = len(rng);
    std::vector<double> sig(n);
    for (double& v : sig) v = val(rng);
    const std::vector<double> ones(n, 1.0);
    for (double beta : {0.01, 0.1, 1.0}) {
      const Image J = l0_smooth(Image(n, 1, 1, sig), beta);
      const double got = oracle::l0_1d_objective(sig, ones, beta, {J.data().begin(), J.data().end()});
      const double best = oracle::l0_1d_optimum(sig, ones, beta);
      worst = std::max(worst, got / best);
      ++cases;
    }
  }
  return {worst <= 1.05, fmt("worst solver/optimum objective ratio %.4f over %d cases (limit 1.05)", worst, cases)};
}

Outcome ac6_energy_monotone() {
  if (g_traces.empty()) return {false, "no traces recorded (run together with AC2 and AC4)"};
  double worst = 0.0;
  int steps = 0;
  for (const auto& t : g_traces) {
    for (std::size_t k = 1; k < t.size(); ++k) {
      worst = std::max(worst, t[k] / t[k - 1] - 1.0);
      ++steps;
    }
  }
  return {worst <= 1e-3, fmt("largest relative energy increase %.3g over %d outer steps in %zu runs (limit 1e-3)",
                             worst, steps, g_traces.size())};
}

Outcome ac7_finite_difference() {
  double worst = 0.0;
  int checks = 0;
  for (unsigned inst = 0; inst < 3; ++inst) {
    const int w = 40, h = 32;
    std::mt19937_64 rng(700 + inst);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto noise = [&](double sigma) {
      Image img(w, h, 1);
      for (double& s : img.data()) s = unit(rng);
      return gaussian_blur(img, sigma);
    };
    const Image y1 = noise(1.0), y2 = noise(1.0), r1 = noise(1.0), r2 = noise(1.0);
    const Image weight = noise(2.0);
    // integer part in [-2, 1], fractional part away from the bilinear cell edges
    FlowField flow(w, h);
    std::uniform_int_distribution<int> whole(-2, 1);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
      flow.u()[i] = whole(rng) + frac(rng);
      flow.v()[i] = whole(rng) + frac(rng);
    }
    const FlowSolveParams fp;
    const PenaltyFn pen = fp.final_penalty();
    const Linearization lin = linearize(y1, y2, r1, r2, flow, DerivativeMode::exact);
    const FlowField grad = data_energy_gradient(lin, weight, fp.lambda_d, pen);
    std::uniform_int_distribution<int> px(4, w - 5), py(4, h - 5);
    for (int k = 0; k < 20; ++k) {
      const int x = px(rng), y = py(rng);
      for (int comp = 0; comp < 2; ++comp) {
        const double step = 1e-6;
        FlowField a = flow, b = flow;
        (comp == 0 ? a.u(x, y) : a.v(x, y)) += step;
        (comp == 0 ? b.u(x, y) : b.v(x, y)) -= step;
        const double fd = (data_energy(y1, y2, r1, r2, weight, a, fp.lambda_d, pen) -
                           data_energy(y1, y2, r1, r2, weight, b, fp.lambda_d, pen)) / (2.0 * step);
        const double an = comp == 0 ? grad.u(x, y) : grad.v(x, y);
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-12});
        worst = std::max(worst, rel);
        ++checks;
      }
    }
  }
  return {worst < 1e-4, fmt("worst relative gradient error %.3g over %d component checks (limit 1e-4)", worst, checks)};
}

Outcome ac8_io_round_trip_and_fuzz() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> fv(-100.0f, 100.0f);
  bool exact = true;
  for (int k = 0; k < 10; ++k) {
    const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 30);
    FlowField f(w, h);
    for (std::size_t i = 0; i < f.pixel_count(); ++i) {
      f.u()[i] = fv(rng);
      f.v()[i] = fv(rng);
    }
    const auto bytes = encode_flo(f);
    exact = exact && decode_flo(bytes) == f && encode_flo(decode_flo(bytes)) == bytes;
    for (int channels : {1, 3}) {
      for (int depth : {8, 16}) {
        const int maxval = depth == 8 ? 255 : 65535;
        Image img(w, h, channels);
        for (double& s : img.data()) {
          s = static_cast<double>(static_cast<float>(rng() % (maxval + 1)) / static_cast<float>(maxval));
        }
        const auto png = encode_png(img, depth);
        exact = exact && decode_image(png) == img && encode_png(decode_image(png), depth) == png;
        const auto pnm = encode_pnm(img, depth);
        exact = exact && decode_image(pnm) == img && encode_pnm(decode_image(pnm), depth) == pnm;
      }
    }
  }

  // Every fuzz case is malformed by construction and must raise IoError.
  Image seed_img(23, 17, 3);
  for (double& s : seed_img.data()) s = static_cast<double>(static_cast<float>(rng() % 256) / 255.0f);
  const std::vector<std::vector<std::uint8_t>> seeds = {
      encode_png(seed_img, 8), encode_pnm(seed_img, 8), encode_flo(FlowField(23, 17, 1.5, -2.5))};
  int errors = 0, escapes = 0, crashes_avoided = 0;
  for (int k = 0; k < 1000; ++k) {
    const int which = k % 3;
    std::vector<std::uint8_t> b = seeds[which];
    switch ((k / 3) % 5) {
      case 0:  // truncation
        b.resize(rng() % b.size());
        break;
      case 1:  // broken magic
        b[rng() % std::min<std::size_t>(b.size(), 2)] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        break;
      case 2:  // random bytes after a valid prefix of the header
      {
        const std::size_t keep = which == 2 ? 4 : which == 1 ? 3 : 8;
        for (std::size_t i = keep; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(rng());
        if (which == 2) {  // make the header inconsistent with the length
          b[4] = static_cast<std::uint8_t>(b[4] | 0x80);
          b[11] = 0x7f;
        }
        break;
      }
      case 3:  // oversize or negative dimensions
        if (which == 0) {
          b[16] = 0x7f;  // IHDR width
        } else if (which == 1) {
          const std::string hdr = "P6\n999999999 17\n255\n";
          b.assign(hdr.begin(), hdr.end());
        } else {
          b[7] = static_cast<std::uint8_t>(0x80 | rng());
        }
        break;
      case 4:  // trailing garbage or corrupted checksum / sample
        if (which == 0) {
          b[33 + rng() % (b.size() - 45)] ^= 0xff;  // inside IDAT: CRC or zlib failure
        } else if (which == 1) {
          b.resize(b.size() - 1 - rng() % 5);
        } else {
          const float bad = (rng() & 1) ? std::nanf("") : INFINITY;
          std::memcpy(b.data() + 12 + 4 * (rng() % (2 * 23 * 17)), &bad, 4);
        }
        break;
    }
    try {
      if (which == 2) {
        decode_flo(b);
      } else {
        decode_image(b);
      }
      ++escapes;
    } catch (const IoError&) {
      ++errors;
    } catch (...) {
      ++crashes_avoided;
    }
  }
  const bool ok = exact && errors == 1000;
  return {ok, fmt("round trips %s; fuzz: %d/1000 typed I/O errors, %d accepted, %d other exceptions",
                  exact ? "bit-exact" : "NOT exact", errors, escapes, crashes_avoided)};
}

Outcome ac9_throughput() {
  RainParams rain;
  rain.seed = 9000;
  const RainPair pair = make_translation_pair(make_background(584, 388, 900), 1.3, -0.7, rain);
  const auto t0 = Clock::now();
  const PipelineResult r = estimate(pair.frame1, pair.frame2, SolverParams{});
  const double t = seconds_since(t0);
  return {t <= 120.0, fmt("584x388 full pipeline in %.1f s with %d threads on %u hardware threads, "
                          "%d outer iterations (limit 120 s)",
                          t, thread_count(), std::thread::hardware_concurrency(), r.iterations_run)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1", ac1_residue_identity},  {"AC2", ac2_static_zero_flow},   {"AC3", ac3_clean_translation},
      {"AC4", ac4_rain_ablation},     {"AC5", ac5_l0_oracle},          {"AC6", ac6_energy_monotone},
      {"AC7", ac7_finite_difference}, {"AC8", ac8_io_round_trip_and_fuzz}, {"AC9", ac9_throughput},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s  %s  [%.1f s]\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
