// SPDX-License-Identifier: Apache-2.0
#include "defeat/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "defeat/errors.hpp"

namespace defeat {

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m;
  m.n = n;
  m.row_ptr.resize(n + 1);
  std::iota(m.row_ptr.begin(), m.row_ptr.end(), 0);
  m.col.resize(n);
  std::iota(m.col.begin(), m.col.end(), 0);
  m.val.assign(n, 1.0);
  return m;
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

double SparseMatrix::at(int i, int j) const {
  auto b = col.begin() + row_ptr[i];
  auto e = col.begin() + row_ptr[i + 1];
  auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return 0.0;
  return val[it - col.begin()];
}

double SparseMatrix::max_asymmetry() const {
  double m = 0;
  for (int i = 0; i < n; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) m = std::max(m, std::abs(val[k] - at(col[k], i)));
  return m;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (int i = 0; i < n; ++i) d[i] = at(i, i);
  return d;
}

void TripletBuilder::reserve(std::size_t k) {
  rows_.reserve(k);
  cols_.reserve(k);
  vals_.reserve(k);
}

void TripletBuilder::add(int i, int j, double v) {
  rows_.push_back(i);
  cols_.push_back(j);
  vals_.push_back(v);
}

SparseMatrix TripletBuilder::build() const {
  // counting sort by row, then sort each row by column and merge duplicates
  SparseMatrix m;
  m.n = n_;
  std::vector<int> count(n_ + 1, 0);
  for (int r : rows_) ++count[r + 1];
  for (int i = 0; i < n_; ++i) count[i + 1] += count[i];
  std::vector<int> order(rows_.size());
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (std::size_t k = 0; k < rows_.size(); ++k) order[fill[rows_[k]]++] = static_cast<int>(k);
  m.row_ptr.assign(n_ + 1, 0);
  m.col.reserve(rows_.size() / 4 + 1);
  m.val.reserve(rows_.size() / 4 + 1);
  std::vector<int> idx;
  for (int i = 0; i < n_; ++i) {
    idx.assign(order.begin() + count[i], order.begin() + count[i + 1]);
    // stable so duplicates are summed in insertion order
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return cols_[a] < cols_[b]; });
    for (std::size_t k = 0; k < idx.size();) {
      int c = cols_[idx[k]];
      double s = 0;
      while (k < idx.size() && cols_[idx[k]] == c) s += vals_[idx[k++]];
      m.col.push_back(c);
      m.val.push_back(s);
    }
    m.row_ptr[i + 1] = static_cast<int>(m.col.size());
  }
  return m;
}

std::vector<double> solve_spd(const SparseMatrix& a, const std::vector<double>& b, double tol,
                              int max_iter, SolveStats* stats) {
  const int n = a.n;
  if (max_iter <= 0) max_iter = std::max(100, 10 * n);
  std::vector<double> x(n, 0.0);
  double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return x;
  }
  std::vector<double> dinv = a.diagonal();
  for (double& d : dinv) d = d != 0.0 ? 1.0 / d : 1.0;
  std::vector<double> r = b, z(n), p(n), q(n);
  for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  double rel = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    a.multiply(p, q);
    double pq = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
    double alpha = rz / pq;
    double rr = 0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rr += r[i] * r[i];
    }
    rel = std::sqrt(rr) / bnorm;
    if (rel <= tol) {
      if (stats) *stats = {it, rel};
      return x;
    }
    for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverFailure(fmt::format("conjugate gradients stopped after {} iterations, relative residual {:.3e}",
                                  max_iter, rel),
                      rel);
}

std::vector<double> solve_spd_direct(const SparseMatrix& a, const std::vector<double>& b,
                                     SolveStats* stats) {
  const int n = a.n;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(a.val.size());
  for (int i = 0; i < n; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) trip.emplace_back(i, a.col[k], a.val[k]);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(m);
  if (solver.info() != Eigen::Success) throw SolverFailure("sparse factorization failed", 1.0);
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  Eigen::VectorXd x = solver.solve(rhs);
  double bn = rhs.norm();
  double res = bn > 0 ? (m * x - rhs).norm() / bn : 0.0;
  if (stats) *stats = {1, res};
  if (solver.info() != Eigen::Success || !std::isfinite(res))
    throw SolverFailure("sparse triangular solve failed", res);
  return {x.data(), x.data() + n};
}

} // namespace defeat
