#pragma once

#include <cstddef>
#include <vector>

namespace odis {

// Dense row-major matrix. Small and value-semantic; everything here runs on
// m x m score covariances (m = 11) or embedding sets.
struct Mat {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(size_t i, size_t j) { return a[i * cols + j]; }
  double operator()(size_t i, size_t j) const { return a[i * cols + j]; }
};

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // non-increasing
  Mat eigenvectors;                 // orthonormal columns, sign-fixed
  int sweeps = 0;
};

// Cyclic Jacobi diagonalization of a symmetric matrix. Sweeps run until every
// off-diagonal magnitude drops below 1e-12 * max(trace, ||A||_F). Eigenvalues
// come back sorted non-increasing; each eigenvector column is sign-fixed so
// its largest-magnitude entry is positive. Throws on non-symmetric input
// (tolerance 1e-10 * max(1, max|a_ij|)).
EigenDecomposition jacobi_eigen(const Mat& sym);

// Sample covariance X^T X / (N-1) of pre-centered rows. The serial variant
// accumulates in input order and is the testing reference; the blocked
// variant accumulates fixed 1024-row blocks (OpenMP across blocks) and merges
// them in block order, so its output does not depend on thread count.
Mat covariance_serial(const Mat& centered);
Mat covariance_blocked(const Mat& centered);

// Linear interpolation between order statistics, p in [0, 100]. Input must be
// sorted ascending and non-empty.
double percentile_sorted(const std::vector<double>& sorted, double p);

// Pearson correlation; returns 0 and sets *degenerate when either side has
// (near-)zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* degenerate = nullptr);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> average_ranks(const std::vector<double>& v);

}  // namespace odis
