#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "rainflow/image.hpp"

namespace rainflow {

namespace detail {
class NeumannDctSolver;
}

enum class Preconditioner { jacobi, dct };

std::string to_string(Preconditioner p);
Preconditioner preconditioner_from_string(const std::string& name);

/// Weights and splitting schedule for the piecewise-smooth layer solve.
struct L0Params {
  double beta = 0.005;     ///< weight of the gradient-count term
  double alpha = 1.0;      ///< fidelity to the observed frame
  double lambda_d = 1.0;   ///< coupling to the other frame's warped layer
  double aux_init = 0.0;   ///< first splitting penalty; <= 0 selects 2 * beta
  double aux_growth = 2.0;
  double aux_max = 1e5;
  Preconditioner preconditioner = Preconditioner::jacobi;
  double cg_tolerance = 1e-6;
  int cg_max_iterations = 200;
  /// Finish with an exact least-squares solve on the final edge support and
  /// greedy removal of edges that do not pay for themselves.
  bool polish = true;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  double initial_aux(double beta_value) const { return aux_init > 0.0 ? aux_init : 2.0 * beta_value; }

  bool operator==(const L0Params&) const = default;
};

/// Joint (channel-summed) squared forward-gradient magnitude above which a
/// pixel counts as carrying an edge.
inline constexpr double kEdgeThreshold = 1e-6;

/// Number of pixels whose joint forward gradient is nonzero.
std::size_t count_edges(const Image& layer, double threshold = kEdgeThreshold);

/// Half-quadratic splitting for
///   min_J  sum_x a(x) |J(x) - T(x)|^2 + beta * #{x : grad J(x) != 0}
/// with auxiliary gradients (h, v) and penalty kappa * |grad J - (h, v)|^2.
/// Edge support is shared across channels.
class L0Splitting {
 public:
  /// `data_weight` is single-channel and strictly positive.
  L0Splitting(Image target, Image data_weight, double beta, const L0Params& params);
  ~L0Splitting();
  L0Splitting(L0Splitting&&) noexcept;
  L0Splitting& operator=(L0Splitting&&) noexcept;

  /// Optimal (h, v) for the current layer: grad J where |grad J|^2 >= beta/kappa, else 0.
  void shrink();
  /// Optimal layer for the current (h, v), by preconditioned CG warm-started at J.
  void solve();
  /// Replaces the layer by the piecewise-constant least-squares fit with
  /// zero gradient wherever the current layer has none, then drops single
  /// edge pixels while that lowers objective(). Never increases objective().
  void polish();
  /// Exact optimum for a single row or column: dynamic programme over
  /// segmentations, O(n^2). Throws DimensionError for 2-D rasters.
  void solve_1d_exact();
  /// Runs the full kappa ladder (and polish() if enabled) and returns the
  /// layer. Single-row and single-column rasters use solve_1d_exact().
  const Image& run();

  double aux() const { return aux_; }
  void set_aux(double kappa) { aux_ = kappa; }
  const Image& layer() const { return layer_; }
  int last_cg_iterations() const { return last_cg_iterations_; }

  /// sum a |J - T|^2 + kappa |grad J - (h,v)|^2 + beta * #{(h,v) != 0}.
  double split_objective() const;
  /// sum a |J - T|^2 + beta * count_edges(J).
  double objective() const;

 private:
  Image target_;
  Image weight_;
  double beta_;
  L0Params params_;
  double aux_;
  Image layer_;
  Image aux_h_;
  Image aux_v_;
  int last_cg_iterations_ = 0;
  std::unique_ptr<detail::NeumannDctSolver> dct_;
};

/// argmin_J |I - J|^2 + beta * |grad J|_0. beta = 0 returns the input.
/// Output samples are rounded to float precision (see snap_to_float), so for a
/// float-representable input I, J + detail_layer(I, J) == I exactly.
/// Uses the schedule and solver settings of `params`; its alpha/lambda_d/beta
/// fields are ignored.
Image l0_smooth(const Image& img, double beta, const L0Params& params = {});

/// argmin_J lambda_d |m (J - J_other)|^2 + alpha |I - J|^2 + beta |grad J|_0,
/// solved as a single splitting problem on the merged per-pixel target
/// (lambda_d m J_other + alpha I) / (lambda_d m + alpha).
Image separate_layer(const Image& frame, const Image& other_warped, const Image& valid_mask,
                     const L0Params& params);

/// Objective minimised by separate_layer, evaluated for a candidate layer.
double separation_objective(const Image& frame, const Image& other_warped,
                            const Image& valid_mask, const Image& layer, const L0Params& params);

/// L = I - J (not clamped).
Image detail_layer(const Image& frame, const Image& layer);

}  // namespace rainflow
