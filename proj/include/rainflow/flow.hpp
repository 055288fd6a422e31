#pragma once

#include <string>

#include "rainflow/decompose.hpp"
#include "rainflow/image.hpp"

namespace rainflow {

enum class PenaltyKind { quadratic, charbonnier };

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& name);

/// rho(z) = mix * z^2 + (1 - mix) * (z^2 + eps^2)^a. With kind == quadratic
/// the robust part is dropped.
struct PenaltyFn {
  PenaltyKind kind = PenaltyKind::charbonnier;
  double exponent = 0.45;
  double epsilon = 0.001;
  double gnc_mix = 0.0;

  double value(double z) const;
  double derivative(double z) const;
  /// derivative(z) / z, finite at z = 0. Weight of the IRLS quadratic bound
  /// rho(z0) + weight(z0) / 2 * (z^2 - z0^2), which majorises rho for a <= 1.
  double weight(double z) const;
  /// value(z) - value(0), so that a zero residual costs nothing.
  double excess(double z) const { return value(z) - value(0.0); }
};

enum class FlowPreconditioner { block_jacobi, ilu };

std::string to_string(FlowPreconditioner p);
FlowPreconditioner flow_preconditioner_from_string(const std::string& name);

/// How the spatial derivatives of the linearised data term are formed.
enum class DerivativeMode {
  /// derivative_blend * warped derivative of frame 2 + (1 - blend) * derivative of frame 1.
  blended,
  /// Analytic derivative of the bilinear interpolant of frame 2 at x + u, i.e.
  /// the exact gradient of the discretised data energy.
  exact,
};

struct FlowSolveParams {
  double lambda_d = 1.0;
  double lambda_s = 0.1;
  double scale_factor = 0.8;
  int pyramid_min_size = 16;
  int warp_iterations = 5;
  int gnc_levels = 3;
  /// GNC stages after the first revisit only this many of the finest levels.
  int gnc_pyramid_levels = 2;
  /// With an initial flow, run only the last GNC stage on the finest
  /// gnc_pyramid_levels levels instead of the whole schedule.
  bool warm_refine = true;
  PenaltyKind penalty = PenaltyKind::charbonnier;
  double penalty_exponent = 0.45;
  double penalty_epsilon = 0.001;
  double derivative_blend = 0.5;
  double cg_tolerance = 1e-6;
  int cg_max_iterations = 300;
  FlowPreconditioner preconditioner = FlowPreconditioner::ilu;
  int median_radius = 2;
  double max_increment = 1.0;

  void validate() const;
  /// Penalty used during GNC stage `stage` (0-based); quadratic first,
  /// fully robust last.
  PenaltyFn penalty_at_stage(int stage) const;
  /// The penalty the final stage optimises; used for energy reporting.
  PenaltyFn final_penalty() const { return penalty_at_stage(gnc_levels - 1); }

  bool operator==(const FlowSolveParams&) const = default;
};

/// First-order expansion of both data terms around the current flow at one
/// resolution. All images are single-channel.
struct Linearization {
  Image intensity_dt;  ///< Y2(x + u) - Y1(x)
  Image intensity_dx;
  Image intensity_dy;
  Image residue_dt;  ///< R2(x + u) - R1(x); empty when the residue term is off
  Image residue_dx;
  Image residue_dy;
  Image valid;  ///< 1 where x + u lies inside the frame

  bool has_residue() const { return !residue_dt.empty(); }
};

/// `luma*` and `residue*` are single-channel; pass empty residue images to
/// drop the residue term.
Linearization linearize(const Image& luma1, const Image& luma2, const Image& residue1,
                        const Image& residue2, const FlowField& flow, DerivativeMode mode,
                        double derivative_blend = 0.5);

/// sum over valid x of lambda_d [(1 - w) rho(Y1 - Y2(x+u)) + w rho(R1 - R2(x+u))].
double data_energy(const Image& luma1, const Image& luma2, const Image& residue1,
                   const Image& residue2, const Image& weight, const FlowField& flow,
                   double lambda_d, const PenaltyFn& penalty);

/// Gradient of the data energy with respect to (u, v) assembled from a
/// linearisation at the current flow.
FlowField data_energy_gradient(const Linearization& lin, const Image& weight, double lambda_d,
                               const PenaltyFn& penalty);

/// lambda_s sum over forward differences of rho(du/dx)+rho(du/dy)+rho(dv/dx)+rho(dv/dy).
/// Uses rho.excess so a constant field costs zero.
double smoothness_energy(const FlowField& flow, double lambda_s, const PenaltyFn& penalty);

/// Robust energy of the linearised problem for an increment `du` on top of `flow`.
double linearized_energy(const Linearization& lin, const Image& weight, const FlowField& flow,
                         const FlowField& increment, const PenaltyFn& data_penalty,
                         const PenaltyFn& smooth_penalty, const FlowSolveParams& params);

struct IncrementStats {
  int cg_iterations = 0;
  double relative_residual = 0.0;
};

/// One IRLS step: weights from the linearisation at zero increment, then CG
/// on the resulting 2N x 2N symmetric system.
/// The returned increment is not clamped.
FlowField solve_increment(const Linearization& lin, const Image& weight, const FlowField& flow,
                          const PenaltyFn& data_penalty, const PenaltyFn& smooth_penalty,
                          const FlowSolveParams& params, IncrementStats* stats = nullptr);

/// Coarse-to-fine GNC estimation of the flow from layer 1 to layer 2.
/// `j1`, `j2` may be 1- or 3-channel (3-channel is reduced to luminance).
/// Residue maps and the weight map are single-channel; an all-zero weight map
/// disables the residue term and the residue maps may then be empty.
/// `init` may be empty (zero start) or a field of the frame size.
FlowField solve_flow(const Image& j1, const Image& j2, const Image& residue1,
                     const Image& residue2, const Image& weight, const FlowField& init,
                     const FlowSolveParams& params);

/// Terms of the joint objective, evaluated for monitoring.
struct EnergyReport {
  double data_intensity = 0.0;
  double data_residue = 0.0;
  double smoothness = 0.0;
  double fidelity1 = 0.0;
  double fidelity2 = 0.0;
  double l0_1 = 0.0;
  double l0_2 = 0.0;
  double total = 0.0;
};

/// Data and smoothness terms use the final-stage penalty's excess over its
/// minimum. Fidelity terms are alpha * |I - J|^2 over all channels; gradient
/// terms are beta * count_edges(J).
EnergyReport energy(const Image& j1, const Image& j2, const Image& residue1, const Image& residue2,
                    const Image& weight, const FlowField& flow, const Image& frame1,
                    const Image& frame2, const FlowSolveParams& params, const L0Params& l0);

}  // namespace rainflow
