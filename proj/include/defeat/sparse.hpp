// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace defeat {

// Compressed sparse rows with sorted column indices.
struct SparseMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  static SparseMatrix identity(int n);
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  double at(int i, int j) const;
  double max_asymmetry() const;
  std::vector<double> diagonal() const;
};

// Builds a CSR pattern from (row, col, value) triplets, summing duplicates.
class TripletBuilder {
public:
  explicit TripletBuilder(int n) : n_(n) {}
  void reserve(std::size_t k);
  void add(int i, int j, double v);
  SparseMatrix build() const;

private:
  int n_;
  std::vector<int> rows_, cols_;
  std::vector<double> vals_;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0; // relative
};

// Jacobi preconditioned conjugate gradients. max_iter <= 0 picks 10 n.
// Throws SolverFailure carrying the relative residual on non-convergence.
std::vector<double> solve_spd(const SparseMatrix& a, const std::vector<double>& rhs, double tol = 1e-10,
                              int max_iter = 0, SolveStats* stats = nullptr);

// Sparse LDLT factorization.
std::vector<double> solve_spd_direct(const SparseMatrix& a, const std::vector<double>& rhs,
                                     SolveStats* stats = nullptr);

} // namespace defeat
