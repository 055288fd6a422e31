#include "dct_solver.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

namespace rainflow::detail {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> path_laplacian_eigenvalues(int n) {
  std::vector<double> eig(n);
  for (int k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * k / (2.0 * n));
    eig[k] = 4.0 * s * s;
  }
  return eig;
}
}  // namespace

NeumannDctSolver::NeumannDctSolver(int width, int height)
    : width_(width),
      height_(height),
      eig_x_(path_laplacian_eigenvalues(width)),
      eig_y_(path_laplacian_eigenvalues(height)) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::lock_guard lock(planner_mutex());
  buffer_ = fftw_alloc_real(n);
  spectrum_ = fftw_alloc_real(n);
  // FFTW_ESTIMATE picks the plan without timing runs, so results are reproducible.
  if (height == 1) {
    forward_ = fftw_plan_r2r_1d(width, buffer_, spectrum_, FFTW_REDFT10, FFTW_ESTIMATE);
    inverse_ = fftw_plan_r2r_1d(width, spectrum_, buffer_, FFTW_REDFT01, FFTW_ESTIMATE);
  } else {
    forward_ = fftw_plan_r2r_2d(height, width, buffer_, spectrum_, FFTW_REDFT10, FFTW_REDFT10,
                                FFTW_ESTIMATE);
    inverse_ = fftw_plan_r2r_2d(height, width, spectrum_, buffer_, FFTW_REDFT01, FFTW_REDFT01,
                                FFTW_ESTIMATE);
  }
}

NeumannDctSolver::~NeumannDctSolver() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (inverse_) fftw_destroy_plan(inverse_);
  fftw_free(buffer_);
  fftw_free(spectrum_);
}

void NeumannDctSolver::solve(std::span<const double> in, std::span<double> out, double a,
                             double kappa) {
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  for (std::size_t i = 0; i < n; ++i) buffer_[i] = in[i];
  fftw_execute(forward_);
  const double norm = (height_ == 1) ? 2.0 * width_ : 4.0 * width_ * height_;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
      spectrum_[i] /= norm * (a + kappa * (eig_x_[x] + eig_y_[y]));
    }
  }
  fftw_execute(inverse_);
  for (std::size_t i = 0; i < n; ++i) out[i] = buffer_[i];
}

}  // namespace rainflow::detail
