#include "rainflow/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cg.hpp"
#include "dct_solver.hpp"
#include "rainflow/imagecore.hpp"
#include "rainflow/parallel.hpp"

namespace rainflow {

std::string to_string(Preconditioner p) { return p == Preconditioner::dct ? "dct" : "jacobi"; }

Preconditioner preconditioner_from_string(const std::string& name) {
  if (name == "dct") return Preconditioner::dct;
  if (name == "jacobi") return Preconditioner::jacobi;
  throw std::invalid_argument("unknown preconditioner '" + name + "' (expected dct or jacobi)");
}

void L0Params::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("l0.beta must be >= 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("l0.alpha must be > 0");
  if (!(lambda_d >= 0.0)) throw std::invalid_argument("l0.lambda_d must be >= 0");
  if (!(aux_growth > 1.0)) throw std::invalid_argument("l0.aux_growth must be > 1");
  if (!(aux_max > 0.0)) throw std::invalid_argument("l0.aux_max must be > 0");
  if (aux_init > 0.0 && !(aux_max > aux_init)) {
    throw std::invalid_argument("l0.aux_max must exceed l0.aux_init");
  }
  if (!(cg_tolerance > 0.0)) throw std::invalid_argument("l0.cg_tolerance must be > 0");
  if (cg_max_iterations < 1) throw std::invalid_argument("l0.cg_max_iterations must be >= 1");
}

std::size_t count_edges(const Image& layer, double threshold) {
  const int w = layer.width(), h = layer.height(), ch = layer.channels();
  std::size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int c = 0; c < ch; ++c) {
        const double v = layer.at(x, y, c);
        const double gx = x + 1 < w ? layer.at(x + 1, y, c) - v : 0.0;
        const double gy = y + 1 < h ? layer.at(x, y + 1, c) - v : 0.0;
        s += gx * gx + gy * gy;
      }
      if (s > threshold) ++n;
    }
  }
  return n;
}

L0Splitting::L0Splitting(Image target, Image data_weight, double beta, const L0Params& params)
    : target_(std::move(target)),
      weight_(std::move(data_weight)),
      beta_(beta),
      params_(params),
      aux_(params.initial_aux(beta)),
      layer_(target_),
      aux_h_(target_.width(), target_.height(), target_.channels()),
      aux_v_(target_.width(), target_.height(), target_.channels()) {
  params_.validate();
  if (!(beta >= 0.0)) throw std::invalid_argument("L0 beta must be >= 0");
  if (weight_.channels() != 1 || !weight_.same_size(target_)) {
    throw DimensionError("L0 data weight must be single-channel and match the target");
  }
  for (double a : weight_.data()) {
    if (!(a > 0.0)) throw std::invalid_argument("L0 data weight must be strictly positive");
  }
}

L0Splitting::~L0Splitting() = default;
L0Splitting::L0Splitting(L0Splitting&&) noexcept = default;
L0Splitting& L0Splitting::operator=(L0Splitting&&) noexcept = default;

void L0Splitting::shrink() {
  const int w = layer_.width(), h = layer_.height(), ch = layer_.channels();
  const double threshold = beta_ / aux_;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double gx[3], gy[3];
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int c = 0; c < ch; ++c) {
        const double v = layer_.at(x, y, c);
        gx[c] = x + 1 < w ? layer_.at(x + 1, y, c) - v : 0.0;
        gy[c] = y + 1 < h ? layer_.at(x, y + 1, c) - v : 0.0;
        s += gx[c] * gx[c] + gy[c] * gy[c];
      }
      const bool keep = s >= threshold;
      for (int c = 0; c < ch; ++c) {
        aux_h_.at(x, y, c) = keep ? gx[c] : 0.0;
        aux_v_.at(x, y, c) = keep ? gy[c] : 0.0;
      }
    }
  }
}

void L0Splitting::solve() {
  const int w = layer_.width(), h = layer_.height(), ch = layer_.channels();
  const std::size_t n = layer_.pixel_count();
  const double kappa = aux_;
  const auto a = weight_.data();

  // A x = a x + kappa L x, L the Neumann grid Laplacian (= D^T D for the
  // forward differences with zero last row/column).
  auto apply = [&](std::span<const double> in, std::span<double> out) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double xi = in[i];
        double lap = 0.0;
        if (x > 0) lap += xi - in[i - 1];
        if (x + 1 < w) lap += xi - in[i + 1];
        if (y > 0) lap += xi - in[i - w];
        if (y + 1 < h) lap += xi - in[i + w];
        out[i] = a[i] * xi + kappa * lap;
      }
    }
  };

  std::vector<double> jacobi;
  detail::NeumannDctSolver* dct = nullptr;
  double a_mean = 0.0;
  if (params_.preconditioner == Preconditioner::jacobi) {
    jacobi.resize(n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const int degree = (x > 0) + (x + 1 < w) + (y > 0) + (y + 1 < h);
        jacobi[i] = 1.0 / (a[i] + kappa * degree);
      }
    }
  } else {
    if (!dct_) dct_ = std::make_unique<detail::NeumannDctSolver>(w, h);
    dct = dct_.get();
    a_mean = deterministic_sum(n, [&](std::size_t i) { return a[i]; }) / static_cast<double>(n);
  }
  auto precondition = [&](std::span<const double> in, std::span<double> out) {
    if (dct) {
      dct->solve(in, out, a_mean, kappa);
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] = jacobi[i] * in[i];
    }
  };

  std::vector<double> rhs(n), x(n);
  last_cg_iterations_ = 0;
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const std::size_t i = static_cast<std::size_t>(y) * w + xx;
        // D^T (h, v): divergence-like adjoint of the forward differences.
        double adj = 0.0;
        if (xx + 1 < w) adj -= aux_h_.at(xx, y, c);
        if (xx > 0) adj += aux_h_.at(xx - 1, y, c);
        if (y + 1 < h) adj -= aux_v_.at(xx, y, c);
        if (y > 0) adj += aux_v_.at(xx, y - 1, c);
        rhs[i] = a[i] * target_.at(xx, y, c) + kappa * adj;
        x[i] = layer_.at(xx, y, c);
      }
    }
    const auto res = detail::conjugate_gradient(apply, precondition, rhs, x, params_.cg_tolerance,
                                                params_.cg_max_iterations);
    last_cg_iterations_ = std::max(last_cg_iterations_, res.iterations);
    for (std::size_t i = 0; i < n; ++i) layer_[i * ch + c] = x[i];
  }
}

const Image& L0Splitting::run() {
  if (beta_ == 0.0) {
    layer_ = target_;
    return layer_;
  }
  if (target_.width() == 1 || target_.height() == 1) {
    solve_1d_exact();
    return layer_;
  }
  for (aux_ = params_.initial_aux(beta_); aux_ < params_.aux_max; aux_ *= params_.aux_growth) {
    shrink();
    solve();
  }
  if (params_.polish) polish();

  // The splitting never collapses to a constant on its own when beta is large
  // compared to the data term, so keep the weighted mean if it scores better.
  const int ch = target_.channels();
  const std::size_t n = target_.pixel_count();
  Image flat(target_.width(), target_.height(), ch);
  const double wsum = deterministic_sum(n, [&](std::size_t i) { return weight_[i]; });
  for (int c = 0; c < ch; ++c) {
    const double m =
        deterministic_sum(n, [&](std::size_t i) { return weight_[i] * target_[i * ch + c]; }) /
        wsum;
    for (std::size_t i = 0; i < n; ++i) flat[i * ch + c] = m;
  }
  const double current = objective();
  Image kept = std::move(layer_);
  layer_ = std::move(flat);
  if (objective() > current) layer_ = std::move(kept);
  return layer_;
}

namespace {

// Union-find over pixels; each root carries the weighted sums of its region.
struct Regions {
  std::vector<std::size_t> parent;
  std::vector<double> wsum;   // sum a
  std::vector<double> wt;     // sum a t, per channel
  std::vector<double> wt2;    // sum a t^2, per channel
  int ch;

  Regions(const Image& target, const Image& weight) : ch(target.channels()) {
    const std::size_t n = target.pixel_count();
    parent.resize(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    wsum.resize(n);
    wt.resize(n * ch);
    wt2.resize(n * ch);
    for (std::size_t i = 0; i < n; ++i) {
      wsum[i] = weight[i];
      for (int c = 0; c < ch; ++c) {
        const double t = target[i * ch + c];
        wt[i * ch + c] = weight[i] * t;
        wt2[i * ch + c] = weight[i] * t * t;
      }
    }
  }

  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    wsum[a] += wsum[b];
    for (int c = 0; c < ch; ++c) {
      wt[a * ch + c] += wt[b * ch + c];
      wt2[a * ch + c] += wt2[b * ch + c];
    }
  }

  // Residual sum of squares of the best constant over a set of roots.
  double cost(const std::size_t* roots, int k) const {
    double s = 0.0, sw = 0.0;
    double st[3] = {0, 0, 0};
    for (int j = 0; j < k; ++j) {
      sw += wsum[roots[j]];
      for (int c = 0; c < ch; ++c) {
        st[c] += wt[roots[j] * ch + c];
        s += wt2[roots[j] * ch + c];
      }
    }
    for (int c = 0; c < ch; ++c) s -= st[c] * st[c] / sw;
    return std::max(s, 0.0);
  }
};

}  // namespace

void L0Splitting::polish() {
  const int w = layer_.width(), h = layer_.height(), ch = layer_.channels();
  if (ch > 3) return;
  const std::size_t n = layer_.pixel_count();
  Regions reg(target_, weight_);
  std::vector<char> edge(n, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int c = 0; c < ch; ++c) {
        const double v = layer_.at(x, y, c);
        const double gx = x + 1 < w ? layer_.at(x + 1, y, c) - v : 0.0;
        const double gy = y + 1 < h ? layer_.at(x, y + 1, c) - v : 0.0;
        s += gx * gx + gy * gy;
      }
      edge[static_cast<std::size_t>(y) * w + x] = s > kEdgeThreshold;
    }
  }
  auto tie = [&](std::size_t i) {
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    if (x + 1 < w) reg.unite(i, i + 1);
    if (y + 1 < h) reg.unite(i, i + w);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!edge[i]) tie(i);
  }

  // Greedy: an edge pixel whose removal saves more than the fit loses goes.
  for (int pass = 0; pass < 8; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!edge[i]) continue;
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      std::size_t roots[3];
      int k = 0;
      roots[k++] = reg.find(i);
      if (x + 1 < w) roots[k++] = reg.find(i + 1);
      if (y + 1 < h) roots[k++] = reg.find(i + w);
      std::sort(roots, roots + k);
      k = static_cast<int>(std::unique(roots, roots + k) - roots);
      double separate = 0.0;
      for (int j = 0; j < k; ++j) separate += reg.cost(&roots[j], 1);
      if (reg.cost(roots, k) - separate < beta_) {
        edge[i] = 0;
        tie(i);
        changed = true;
      }
    }
    if (!changed) break;
  }

  Image fit(w, h, ch);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = reg.find(i);
    for (int c = 0; c < ch; ++c) fit[i * ch + c] = reg.wt[r * ch + c] / reg.wsum[r];
  }
  const double current = objective();
  std::swap(fit, layer_);
  if (objective() > current) std::swap(fit, layer_);
}

void L0Splitting::solve_1d_exact() {
  if (target_.width() != 1 && target_.height() != 1) {
    throw DimensionError("solve_1d_exact: raster is not a single row or column");
  }
  const int ch = target_.channels();
  const std::size_t n = target_.pixel_count();
  // prefix sums of a, a t, a t^2
  std::vector<double> sa(n + 1, 0.0), sat((n + 1) * ch, 0.0), sat2((n + 1) * ch, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sa[i + 1] = sa[i] + weight_[i];
    for (int c = 0; c < ch; ++c) {
      const double t = target_[i * ch + c];
      sat[(i + 1) * ch + c] = sat[i * ch + c] + weight_[i] * t;
      sat2[(i + 1) * ch + c] = sat2[i * ch + c] + weight_[i] * t * t;
    }
  }
  auto cost = [&](std::size_t lo, std::size_t hi) {  // samples [lo, hi)
    const double w = sa[hi] - sa[lo];
    double s = 0.0;
    for (int c = 0; c < ch; ++c) {
      const double m = sat[hi * ch + c] - sat[lo * ch + c];
      s += sat2[hi * ch + c] - sat2[lo * ch + c] - m * m / w;
    }
    return std::max(s, 0.0);
  };
  // best[j]: optimum over the first j samples; prev[j]: start of its last segment
  std::vector<double> best(n + 1, 0.0);
  std::vector<std::size_t> prev(n + 1, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    best[j] = cost(0, j);
    prev[j] = 0;
    for (std::size_t i = 1; i < j; ++i) {
      const double v = best[i] + beta_ + cost(i, j);
      if (v < best[j]) {
        best[j] = v;
        prev[j] = i;
      }
    }
  }
  for (std::size_t hi = n; hi > 0;) {
    const std::size_t lo = prev[hi];
    const double w = sa[hi] - sa[lo];
    for (int c = 0; c < ch; ++c) {
      const double m = (sat[hi * ch + c] - sat[lo * ch + c]) / w;
      for (std::size_t i = lo; i < hi; ++i) layer_[i * ch + c] = m;
    }
    hi = lo;
  }
}

double L0Splitting::split_objective() const {
  const int w = layer_.width(), h = layer_.height(), ch = layer_.channels();
  double data = 0.0, coupling = 0.0;
  std::size_t support = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = weight_.at(x, y);
      bool nonzero = false;
      for (int c = 0; c < ch; ++c) {
        const double v = layer_.at(x, y, c);
        const double d = v - target_.at(x, y, c);
        data += a * d * d;
        const double gx = x + 1 < w ? layer_.at(x + 1, y, c) - v : 0.0;
        const double gy = y + 1 < h ? layer_.at(x, y + 1, c) - v : 0.0;
        const double hx = aux_h_.at(x, y, c), hy = aux_v_.at(x, y, c);
        coupling += (gx - hx) * (gx - hx) + (gy - hy) * (gy - hy);
        nonzero = nonzero || hx != 0.0 || hy != 0.0;
      }
      support += nonzero;
    }
  }
  return data + aux_ * coupling + beta_ * static_cast<double>(support);
}

double L0Splitting::objective() const {
  const int ch = layer_.channels();
  double data = 0.0;
  for (std::size_t i = 0; i < layer_.pixel_count(); ++i) {
    for (int c = 0; c < ch; ++c) {
      const double d = layer_[i * ch + c] - target_[i * ch + c];
      data += weight_[i] * d * d;
    }
  }
  return data + beta_ * static_cast<double>(count_edges(layer_));
}

Image l0_smooth(const Image& img, double beta, const L0Params& params) {
  if (!(beta >= 0.0)) throw std::invalid_argument("l0_smooth: beta must be >= 0");
  if (beta == 0.0) return img;
  require_finite(img, "l0_smooth");
  L0Splitting solver(img, Image(img.width(), img.height(), 1, 1.0), beta, params);
  return snapped_to_float(solver.run());
}

Image separate_layer(const Image& frame, const Image& other_warped, const Image& valid_mask,
                     const L0Params& params) {
  params.validate();
  if (!frame.same_shape(other_warped)) {
    throw DimensionError("separate_layer: frame and warped layer shapes differ");
  }
  if (!frame.same_size(valid_mask) || valid_mask.channels() != 1) {
    throw DimensionError("separate_layer: mask must be single-channel and match the frame");
  }
  const int ch = frame.channels();
  const std::size_t n = frame.pixel_count();
  Image weight(frame.width(), frame.height(), 1);
  Image target(frame.width(), frame.height(), ch);
  for (std::size_t i = 0; i < n; ++i) {
    const double coupling = params.lambda_d * valid_mask[i];
    const double a = coupling + params.alpha;
    weight[i] = a;
    for (int c = 0; c < ch; ++c) {
      const std::size_t k = i * ch + c;
      target[k] = coupling == 0.0 ? frame[k] : (coupling * other_warped[k] + params.alpha * frame[k]) / a;
    }
  }
  if (params.beta == 0.0) return snapped_to_float(std::move(target));
  L0Splitting solver(std::move(target), std::move(weight), params.beta, params);
  return snapped_to_float(solver.run());
}

double separation_objective(const Image& frame, const Image& other_warped,
                            const Image& valid_mask, const Image& layer, const L0Params& params) {
  const int ch = frame.channels();
  double energy = 0.0;
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    const double coupling = params.lambda_d * valid_mask[i];
    for (int c = 0; c < ch; ++c) {
      const std::size_t k = i * ch + c;
      const double dc = layer[k] - other_warped[k];
      const double df = frame[k] - layer[k];
      energy += coupling * dc * dc + params.alpha * df * df;
    }
  }
  return energy + params.beta * static_cast<double>(count_edges(layer));
}

Image detail_layer(const Image& frame, const Image& layer) {
  if (!frame.same_shape(layer)) throw DimensionError("detail_layer: shapes differ");
  Image out(frame.width(), frame.height(), frame.channels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = frame[i] - layer[i];
  return out;
}

}  // namespace rainflow
