#pragma once

#include <string>
#include <vector>

#include "rainflow/image.hpp"
#include "rainflow/pipeline.hpp"

namespace rainflow {

struct FlowStats {
  double avg_epe = 0.0;
  double avg_magnitude = 0.0;  ///< of the estimate, over the evaluated pixels
  double max_magnitude = 0.0;
  double valid_fraction = 0.0;  ///< evaluated pixels / all pixels
};

inline constexpr int kDefaultBorder = 10;

/// Evaluates where `valid` is nonzero, the ground truth is known and the pixel
/// is at least `border` pixels from the frame edge. `valid` may be empty
/// (everything valid). Throws std::invalid_argument if nothing is left.
FlowStats endpoint_error(const FlowField& est, const FlowField& gt, const Image& valid,
                         int border = kDefaultBorder);

enum class Method { full, no_residue, no_decomposition, plain };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
std::vector<Method> all_methods();
SolverParams with_method(SolverParams params, Method m);

struct ManifestEntry {
  std::string frame1;
  std::string frame2;
  std::string ground_truth;
  std::string label;
};

/// One `frame1 frame2 gt_flo label` entry per line; blank lines and lines
/// starting with '#' are skipped. Relative paths are resolved against
/// `base_dir`. Throws std::invalid_argument naming the offending line.
std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& base_dir = "");
std::vector<ManifestEntry> read_manifest(const std::string& path);

struct MethodResult {
  Method method = Method::full;
  FlowStats stats;
  int iterations = 0;
};

struct EntryResult {
  ManifestEntry entry;
  bool ok = false;
  std::string error;
  std::vector<MethodResult> methods;
};

struct MethodSummary {
  Method method = Method::full;
  int pairs = 0;
  double mean_epe = 0.0;
  double mean_magnitude = 0.0;
};

struct SuiteReport {
  std::vector<EntryResult> entries;  ///< sorted by label
  std::vector<MethodSummary> summary;
  int failures = 0;
};

SuiteReport run_suite(const std::vector<ManifestEntry>& manifest, const SolverParams& params,
                      const std::vector<Method>& methods = all_methods(),
                      int border = kDefaultBorder);

/// Means per method, recomputed from the per-entry results.
std::vector<MethodSummary> summarize(const std::vector<EntryResult>& entries,
                                     const std::vector<Method>& methods);

std::string report_json(const SuiteReport& report);
std::string report_table(const SuiteReport& report);

}  // namespace rainflow
