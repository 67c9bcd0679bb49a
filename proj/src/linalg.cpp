#include "odis/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "odis/types.hpp"

namespace odis {

namespace {

void check_symmetric(const Mat& m) {
  if (m.rows != m.cols) throw OdisError("jacobi_eigen: matrix not square");
  double max_abs = 0.0;
  for (double v : m.a) max_abs = std::max(max_abs, std::fabs(v));
  const double tol = 1e-10 * std::max(1.0, max_abs);
  for (size_t i = 0; i < m.rows; ++i)
    for (size_t j = i + 1; j < m.cols; ++j)
      if (std::fabs(m(i, j) - m(j, i)) > tol)
        throw OdisError("jacobi_eigen: matrix not symmetric");
}

double off_diagonal_max(const Mat& m) {
  double mx = 0.0;
  for (size_t i = 0; i < m.rows; ++i)
    for (size_t j = i + 1; j < m.cols; ++j)
      mx = std::max(mx, std::fabs(m(i, j)));
  return mx;
}

}  // namespace

EigenDecomposition jacobi_eigen(const Mat& sym) {
  check_symmetric(sym);
  const size_t n = sym.rows;

  Mat a = sym;
  // Symmetrize exactly so rotation updates stay consistent.
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }

  Mat v(n, n, 0.0);
  for (size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double trace = 0.0;
  double fro2 = 0.0;
  for (size_t i = 0; i < n; ++i) trace += a(i, i);
  for (double x : a.a) fro2 += x * x;
  const double scale = std::max(trace, std::sqrt(fro2));
  const double threshold = 1e-12 * scale;

  EigenDecomposition out;
  out.eigenvalues.assign(n, 0.0);

  int sweeps = 0;
  if (scale > 0.0) {
    const int max_sweeps = 100;
    while (off_diagonal_max(a) > threshold) {
      if (++sweeps > max_sweeps)
        throw OdisError("jacobi_eigen: no convergence after 100 sweeps");
      for (size_t p = 0; p < n; ++p) {
        for (size_t q = p + 1; q < n; ++q) {
          double apq = a(p, q);
          if (std::fabs(apq) <= threshold) continue;
          double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          double t = (theta >= 0 ? 1.0 : -1.0) /
                     (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
          double c = 1.0 / std::sqrt(t * t + 1.0);
          double s = t * c;
          double tau = s / (1.0 + c);

          double app = a(p, p), aqq = a(q, q);
          a(p, p) = app - t * apq;
          a(q, q) = aqq + t * apq;
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (size_t r = 0; r < n; ++r) {
            if (r != p && r != q) {
              double arp = a(r, p), arq = a(r, q);
              a(r, p) = arp - s * (arq + tau * arp);
              a(p, r) = a(r, p);
              a(r, q) = arq + s * (arp - tau * arq);
              a(q, r) = a(r, q);
            }
            double vrp = v(r, p), vrq = v(r, q);
            v(r, p) = vrp - s * (vrq + tau * vrp);
            v(r, q) = vrq + s * (vrp - tau * vrq);
          }
        }
      }
    }
  }
  out.sweeps = sweeps;

  // Sort eigenpairs by descending eigenvalue (ties keep sweep order).
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    return a(i, i) > a(j, j);
  });

  out.eigenvectors = Mat(n, n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    // Sign convention: largest-magnitude entry positive.
    size_t arg = 0;
    double best = -1.0;
    for (size_t r = 0; r < n; ++r) {
      double mag = std::fabs(v(r, src));
      if (mag > best) {
        best = mag;
        arg = r;
      }
    }
    double flip = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = flip * v(r, src);
  }
  return out;
}

namespace {

constexpr size_t kCovBlockRows = 1024;

void accumulate_block(const Mat& x, size_t row_begin, size_t row_end, Mat& acc) {
  const size_t m = x.cols;
  for (size_t i = row_begin; i < row_end; ++i) {
    const double* row = &x.a[i * m];
    for (size_t p = 0; p < m; ++p) {
      double xp = row[p];
      if (xp == 0.0) continue;
      for (size_t q = p; q < m; ++q) acc(p, q) += xp * row[q];
    }
  }
}

Mat finalize_covariance(Mat upper, size_t n_rows) {
  const size_t m = upper.cols;
  const double denom = static_cast<double>(n_rows - 1);
  for (size_t p = 0; p < m; ++p)
    for (size_t q = p; q < m; ++q) {
      double v = upper(p, q) / denom;
      upper(p, q) = v;
      upper(q, p) = v;
    }
  return upper;
}

}  // namespace

Mat covariance_serial(const Mat& centered) {
  if (centered.rows < 2)
    throw InsufficientDataError("covariance needs at least 2 rows");
  Mat acc(centered.cols, centered.cols, 0.0);
  accumulate_block(centered, 0, centered.rows, acc);
  return finalize_covariance(std::move(acc), centered.rows);
}

Mat covariance_blocked(const Mat& centered) {
  if (centered.rows < 2)
    throw InsufficientDataError("covariance needs at least 2 rows");
  const size_t n = centered.rows;
  const size_t m = centered.cols;
  const size_t n_blocks = (n + kCovBlockRows - 1) / kCovBlockRows;

  std::vector<Mat> partials(n_blocks, Mat(m, m, 0.0));
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(n_blocks); ++b) {
    size_t begin = static_cast<size_t>(b) * kCovBlockRows;
    size_t end = std::min(begin + kCovBlockRows, n);
    accumulate_block(centered, begin, end, partials[static_cast<size_t>(b)]);
  }

  // Merge in block order: result is independent of the thread count.
  Mat acc(m, m, 0.0);
  for (size_t b = 0; b < n_blocks; ++b)
    for (size_t i = 0; i < acc.a.size(); ++i) acc.a[i] += partials[b].a[i];
  return finalize_covariance(std::move(acc), n);
}

double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw OdisError("percentile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 100.0) return sorted.back();
  double h = p / 100.0 * static_cast<double>(sorted.size() - 1);
  size_t i = static_cast<size_t>(h);
  double frac = h - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* degenerate) {
  if (x.size() != y.size()) throw OdisError("pearson: length mismatch");
  if (x.size() < 2) throw InsufficientDataError("pearson needs n >= 2");
  if (degenerate) *degenerate = false;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

}  // namespace odis
