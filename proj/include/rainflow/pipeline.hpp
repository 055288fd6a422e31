#pragma once

#include <string>
#include <vector>

#include "rainflow/decompose.hpp"
#include "rainflow/flow.hpp"
#include "rainflow/image.hpp"
#include "rainflow/residue.hpp"

namespace rainflow {

/// How the two layers are refreshed in each outer iteration.
enum class LayerUpdate {
  /// Both layers from the previous pair.
  jacobi,
  /// Layer 2 from the freshly updated layer 1.
  gauss_seidel,
  /// Jacobi, but each layer is coupled to the midpoint of itself and the
  /// other warped layer with doubled weight. For a symmetric coupling
  /// |a - b|^2 this is a separable upper bound that is tight at the current
  /// pair, so the joint objective cannot increase.
  midpoint,
};

std::string to_string(LayerUpdate u);
LayerUpdate layer_update_from_string(const std::string& name);

struct SolverParams {
  FlowSolveParams flow;
  L0Params l0;
  double gamma = kDefaultResidueGamma;
  int max_iterations = 5;  ///< outer alternations after the initial flow solve
  double energy_tolerance = 1e-4;
  bool use_residue = true;        ///< false forces w = 0
  bool use_decomposition = true;  ///< false keeps J = I
  LayerUpdate layer_update = LayerUpdate::jacobi;
  /// Weight the layer coupling per pixel by (1 - w) * psi(|J - J_other_w|) / 2,
  /// psi the reweighting function of the final flow penalty; false uses the
  /// plain warp-validity mask.
  bool robust_coupling = false;
  /// Reject an outer iteration that raises the total energy: the previous
  /// layers and flow are kept and the alternation stops.
  bool monotone = true;

  void validate() const;
  bool operator==(const SolverParams&) const = default;
};

struct PipelineResult {
  FlowField flow;
  FlowField initial_flow;  ///< flow from the raw frames, before any layer update
  Image J1, J2, L1, L2;
  std::vector<EnergyReport> energy_trace;  ///< initial state plus one entry per iteration
  int iterations_run = 0;
  int rejected_iteration = 0;  ///< outer iteration discarded by the monotone check, 0 if none
};

/// Alternates layer separation and flow estimation on a pair of RGB frames.
/// Frames are rounded to float precision on entry, so I == J + L holds
/// exactly for the rounded frames.
PipelineResult estimate(const Image& frame1, const Image& frame2, const SolverParams& params);

struct InverseFlow {
  FlowField flow;
  Image valid;  ///< 0 where the value was hole-filled
};

/// Approximate backward field by bilinear forward splatting of -u; holes take
/// the value of the nearest splatted pixel (4-connected distance).
InverseFlow inverse_flow(const FlowField& flow);

}  // namespace rainflow
