#pragma once

// Exact solver for (a I + kappa L) x = r on a W x H grid, L the 4-neighbour
// Laplacian with Neumann borders, diagonalised by the DCT-II. Internal header.

#include <fftw3.h>

#include <memory>
#include <span>
#include <vector>

namespace rainflow::detail {

class NeumannDctSolver {
 public:
  NeumannDctSolver(int width, int height);
  ~NeumannDctSolver();
  NeumannDctSolver(const NeumannDctSolver&) = delete;
  NeumannDctSolver& operator=(const NeumannDctSolver&) = delete;

  /// out = (a I + kappa L)^-1 in.
  void solve(std::span<const double> in, std::span<double> out, double a, double kappa);

 private:
  int width_;
  int height_;
  double* buffer_ = nullptr;
  double* spectrum_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
  std::vector<double> eig_x_;
  std::vector<double> eig_y_;
};

}  // namespace rainflow::detail
